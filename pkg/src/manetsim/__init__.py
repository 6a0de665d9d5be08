"""Deterministic discrete-event simulator for MANET reactive routing."""

from .config import ConfigError, ScenarioConfig, validate_config
from .core import Engine, Event, EventKind, Rng, SchedulingInPast
from .invariants import InvariantChecks
from .metrics import MetricsRow, NoDeliveries, NoTraffic, avg_e2e_delay, pdf, throughput_ratio
from .runner import RunResult, SweepSpec, run_scenario, sweep
from .sim import Simulation
from .traffic import CbrFlow

__version__ = "0.1.0"

__all__ = [
    "CbrFlow", "ConfigError", "Engine", "Event", "EventKind", "InvariantChecks",
    "MetricsRow", "NoDeliveries", "NoTraffic", "Rng", "RunResult", "ScenarioConfig",
    "SchedulingInPast", "Simulation", "SweepSpec", "avg_e2e_delay", "pdf",
    "run_scenario", "sweep", "throughput_ratio", "validate_config",
]
