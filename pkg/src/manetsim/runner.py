"""Single-run orchestration and the experiment sweep."""

from __future__ import annotations

import hashlib
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

from .config import ScenarioConfig
from .metrics import CSV_HEADER, Counters, MetricsRow, recount_trace
from .sim import Simulation


@dataclass
class RunResult:
    row: MetricsRow                 # computed by trace recount
    online_row: MetricsRow          # computed from the live counters
    trace_path: str | None
    trace_sha256: str
    dispatched: int

    @property
    def consistent(self) -> bool:
        return (self.row.psnd == self.online_row.psnd
                and self.row.prec == self.online_row.prec
                and self.row.routing_overhead_pkts == self.online_row.routing_overhead_pkts
                and self.row.routing_overhead_bytes == self.online_row.routing_overhead_bytes
                and _close_us(self.row.avg_e2e_delay_s, self.online_row.avg_e2e_delay_s))


def _close_us(a, b) -> bool:
    if a is None or b is None:
        return a is None and b is None
    return abs(a - b) <= 1e-6       # one clock tick


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def run_scenario(cfg: ScenarioConfig, trace_path: str | None = None,
                 checks=None) -> RunResult:
    """Run one deterministic scenario; metrics come from re-reading the trace."""
    keep = trace_path is not None
    if trace_path is None:
        fd, trace_path = tempfile.mkstemp(prefix="manetsim_", suffix=".tr")
        os.close(fd)
    sim = Simulation(cfg, trace_path, checks=checks)
    dispatched = sim.run()
    counters = recount_trace(trace_path)
    row = MetricsRow.build(cfg.protocol, cfg.nodes, cfg.max_speed, cfg.seed,
                           counters, cfg.pkt_size, cfg.sim_time)
    online_row = MetricsRow.build(cfg.protocol, cfg.nodes, cfg.max_speed, cfg.seed,
                                  sim.online.c, cfg.pkt_size, cfg.sim_time)
    digest = _sha256(trace_path)
    if not keep:
        os.unlink(trace_path)
        trace_path = None
    return RunResult(row, online_row, trace_path, digest, dispatched)


@dataclass
class SweepSpec:
    base: ScenarioConfig = field(default_factory=ScenarioConfig)
    protocols: tuple = ("aodv", "dsr", "aomdv")
    node_counts: tuple = (60, 80)
    speeds: tuple = (0, 10, 20, 30, 40, 50, 60)
    seeds: tuple = tuple(range(1, 11))

    def cells(self) -> list[ScenarioConfig]:
        out = []
        for proto in self.protocols:
            for nodes in self.node_counts:
                for speed in self.speeds:
                    for seed in self.seeds:
                        out.append(replace(self.base, protocol=proto, nodes=nodes,
                                           max_speed=float(speed), seed=seed))
        return out


def _run_cell(cfg: ScenarioConfig):
    try:
        result = run_scenario(cfg)
        if not result.consistent:
            raise RuntimeError("online metrics disagree with trace recount")
        return result.row.csv_line(), None
    except Exception as exc:   # error rows keep the sweep moving
        stub = f"{cfg.protocol},{cfg.nodes},{cfg.max_speed},{cfg.seed},,,,,,,,"
        return stub, f"{cfg.protocol}/{cfg.nodes}/{cfg.max_speed}/{cfg.seed}: {exc}"


def sweep(spec: SweepSpec, out_csv: str, workers: int = 0,
          progress=None) -> tuple[int, list[str]]:
    """Run every cell of the grid; rows appear in deterministic grid order.

    Returns (row count, error messages).  Cells share nothing, so they can
    run in parallel worker processes.
    """
    cells = spec.cells()
    errors: list[str] = []
    lines: list[str] = []
    if workers <= 0:
        workers = os.cpu_count() or 1
    if workers == 1:
        results = map(_run_cell, cells)
        collected = []
        for i, res in enumerate(results):
            collected.append(res)
            if progress:
                progress(i + 1, len(cells))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            collected = []
            for i, res in enumerate(pool.map(_run_cell, cells, chunksize=1)):
                collected.append(res)
                if progress:
                    progress(i + 1, len(cells))
    for line, err in collected:
        lines.append(line)
        if err is not None:
            errors.append(err)
    with open(out_csv, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for line in lines:
            fh.write(line + "\n")
    return len(lines), errors
