"""Scenario configuration: defaults, validation, and the flat config file.

Config files are `key = value` lines with `#` comments; nested sections
use dotted keys (`radio.range = 250`).  Unknown keys are errors.
Defaults reproduce the reference setup: 500 m x 500 m area, 512-byte
packets, CBR/UDP traffic, 300 s of simulated time, random waypoint
motion.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields as dc_fields

from .phy import RadioConfig
from .traffic import CbrFlow

PROTOCOLS = ("aodv", "dsr", "aomdv")


class ConfigError(Exception):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


@dataclass
class ScenarioConfig:
    protocol: str = "aodv"
    nodes: int = 60
    area_width: float = 500.0
    area_height: float = 500.0
    max_speed: float = 10.0
    pause: float = 0.0
    sim_time: float = 300.0
    seed: int = 1
    flows: int = 10
    rate: float = 4.0
    pkt_size: int = 512
    ttl: int = 32
    buffer_capacity: int = 64
    buffer_timeout: float = 30.0
    trace_mac: bool = True
    radio: RadioConfig = field(default_factory=RadioConfig)
    flow_list: list[CbrFlow] | None = None      # explicit flows override `flows`
    positions: list[tuple[float, float]] | None = None  # explicit placement
    protocol_params: dict = field(default_factory=dict)


_SCALAR_FIELDS = {
    "protocol": str,
    "nodes": int,
    "max_speed": float,
    "pause": float,
    "sim_time": float,
    "seed": int,
    "flows": int,
    "rate": float,
    "pkt_size": int,
    "ttl": int,
    "buffer_capacity": int,
    "buffer_timeout": float,
    "trace_mac": bool,
}

def _coerce_bool(raw) -> bool:
    if isinstance(raw, bool):
        return raw
    low = str(raw).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


_RADIO_FIELDS = {
    "range": float,
    "bandwidth": float,
    "per_hop_loss": float,
    "link_fail_detect_delay": float,
    "collisions": _coerce_bool,
    "rebroadcast_jitter": float,
}

_PROTOCOL_SECTIONS = ("aodv", "dsr", "aomdv")


def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def validate_config(raw: dict) -> ScenarioConfig:
    """Apply defaults, coerce types, and collect every violation by field name."""
    errors: list[str] = []
    cfg = ScenarioConfig()
    radio_kwargs: dict = {}
    proto_params: dict[str, dict] = {}
    flow_specs: dict[int, str] = {}

    for key, value in raw.items():
        try:
            if key == "area":
                w, h = str(value).replace("x", " ").split()
                cfg.area_width, cfg.area_height = float(w), float(h)
            elif key in ("area.width", "area_width"):
                cfg.area_width = float(value)
            elif key in ("area.height", "area_height"):
                cfg.area_height = float(value)
            elif key in _SCALAR_FIELDS:
                typ = _SCALAR_FIELDS[key]
                if typ is bool and isinstance(value, str):
                    setattr(cfg, key, _parse_bool(value))
                else:
                    setattr(cfg, key, typ(value))
            elif key.startswith("radio."):
                sub = key.split(".", 1)[1]
                if sub not in _RADIO_FIELDS:
                    errors.append(f"{key}: unknown radio parameter")
                else:
                    radio_kwargs[sub] = _RADIO_FIELDS[sub](value)
            elif key.split(".", 1)[0] in _PROTOCOL_SECTIONS and "." in key:
                section, sub = key.split(".", 1)
                proto_params.setdefault(section, {})[sub] = value
            elif key.startswith("flow.") and key.split(".", 1)[1].isdigit():
                flow_specs[int(key.split(".", 1)[1])] = str(value)
            else:
                errors.append(f"{key}: unknown key")
        except (ValueError, TypeError) as exc:
            errors.append(f"{key}: {exc}")

    if cfg.protocol not in PROTOCOLS:
        errors.append(f"protocol: must be one of {PROTOCOLS}, got {cfg.protocol!r}")
    if cfg.nodes < 1:
        errors.append("nodes: must be >= 1")
    if cfg.area_width <= 0:
        errors.append("area.width: must be positive")
    if cfg.area_height <= 0:
        errors.append("area.height: must be positive")
    if cfg.max_speed < 0:
        errors.append("max_speed: must be >= 0")
    if cfg.pause < 0:
        errors.append("pause: must be >= 0")
    if cfg.sim_time <= 0:
        errors.append("sim_time: must be positive")
    if cfg.seed < 0:
        errors.append("seed: must be >= 0")
    if cfg.flows < 0:
        errors.append("flows: must be >= 0")
    if cfg.rate <= 0:
        errors.append("rate: must be positive")
    if cfg.pkt_size < 1:
        errors.append("pkt_size: must be >= 1")
    if cfg.ttl < 1:
        errors.append("ttl: must be >= 1")
    if cfg.buffer_capacity < 1:
        errors.append("buffer_capacity: must be >= 1")
    if cfg.buffer_timeout <= 0:
        errors.append("buffer_timeout: must be positive")

    try:
        cfg.radio = RadioConfig(**radio_kwargs)
    except (ValueError, TypeError) as exc:
        errors.append(f"radio: {exc}")

    if flow_specs:
        flows = []
        for idx in sorted(flow_specs):
            parts = flow_specs[idx].split()
            try:
                if len(parts) != 5:
                    raise ValueError("expected: src dst rate start stop")
                flows.append(CbrFlow(int(parts[0]), int(parts[1]), float(parts[2]),
                                     cfg.pkt_size, float(parts[3]), float(parts[4])))
            except ValueError as exc:
                errors.append(f"flow.{idx}: {exc}")
        cfg.flow_list = flows

    cfg.protocol_params = proto_params
    if errors:
        raise ConfigError(errors)
    return cfg


def parse_config_file(path: str) -> dict:
    raw: dict = {}
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError([f"{path}:{line_no}: expected key = value"])
            key, _, value = line.partition("=")
            raw[key.strip()] = value.strip()
    return raw
