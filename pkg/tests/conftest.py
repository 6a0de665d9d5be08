import os
import sys

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from manetsim.config import ScenarioConfig
from manetsim.phy import RadioConfig
from manetsim.sim import Simulation
from manetsim.trace import TraceRecord, parse_trace
from manetsim.traffic import CbrFlow


def make_sim(tmp_path, *, protocol="aodv", positions=None, flows=None,
             nodes=None, max_speed=0.0, sim_time=30.0, seed=1, checks=None,
             trace_name="run.tr", **cfg_kwargs) -> Simulation:
    """Hand-built scenario: explicit positions/flows, static by default.

    Unit scenarios run on the clean deterministic medium (no contention
    stand-in) unless a test passes its own RadioConfig.
    """
    if positions is not None:
        nodes = len(positions)
    cfg_kwargs.setdefault("radio", RadioConfig(collisions=False, rebroadcast_jitter=0.0))
    cfg = ScenarioConfig(
        protocol=protocol,
        nodes=nodes,
        max_speed=max_speed,
        sim_time=sim_time,
        seed=seed,
        flows=0 if flows is not None else cfg_kwargs.pop("n_flows", 0),
        flow_list=flows,
        positions=positions,
        **cfg_kwargs,
    )
    return Simulation(cfg, str(tmp_path / trace_name), checks=checks)


def read_trace(sim_or_path) -> list[TraceRecord]:
    path = sim_or_path if isinstance(sim_or_path, str) else sim_or_path.trace_path
    with open(path) as fh:
        return parse_trace(fh)


def flow(src, dst, rate=4.0, start=1.0, stop=25.0, pkt_size=512) -> CbrFlow:
    return CbrFlow(src, dst, rate, pkt_size, start, stop)


# Three nodes in a line; ends are out of range of each other (range 250).
CHAIN3 = [(0.0, 0.0), (200.0, 0.0), (400.0, 0.0)]

# Diamond: 0 reaches 3 only via 1 or 2; 1 and 2 are out of range of each other.
DIAMOND = [(0.0, 0.0), (200.0, 0.0), (0.0, 200.0), (200.0, 200.0)]

# Eight-node tree: a 0-2-4-7 backbone with one leaf on each backbone node.
# Spacing keeps every leaf in range of exactly one backbone node.
TREE8 = [
    (0.0, 0.0),      # 0: backbone head
    (0.0, 200.0),    # 1: leaf of 0
    (200.0, 0.0),    # 2: backbone
    (200.0, 200.0),  # 3: leaf of 2
    (400.0, 0.0),    # 4: backbone
    (400.0, 200.0),  # 5: leaf of 4
    (600.0, 200.0),  # 6: leaf of 7
    (600.0, 0.0),    # 7: backbone tail
]
