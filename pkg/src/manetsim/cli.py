"""Command line entry point: run one scenario, sweep the grid, or
recompute metrics from an existing trace."""

from __future__ import annotations

import argparse
import sys
import time

from .config import ConfigError, ScenarioConfig, parse_config_file, validate_config
from .metrics import CSV_HEADER, MetricsRow, recount_trace
from .runner import SweepSpec, run_scenario, sweep


def _add_scenario_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--protocol", choices=("aodv", "dsr", "aomdv"))
    p.add_argument("--nodes", type=int)
    p.add_argument("--max-speed", type=float, dest="max_speed")
    p.add_argument("--seed", type=int)
    p.add_argument("--time", type=float, dest="sim_time")
    p.add_argument("--area", help="width height, e.g. '500 500'")
    p.add_argument("--flows", type=int)
    p.add_argument("--rate", type=float)
    p.add_argument("--pkt-size", type=int, dest="pkt_size")
    p.add_argument("--pause", type=float)
    p.add_argument("--range", type=float, dest="radio_range")
    p.add_argument("--no-mac-trace", action="store_true",
                   help="omit MAC-layer records from the trace")


def _build_config(args) -> ScenarioConfig:
    raw = parse_config_file(args.config) if args.config else {}
    for key in ("protocol", "nodes", "max_speed", "seed", "sim_time", "area",
                "flows", "rate", "pkt_size", "pause"):
        val = getattr(args, key, None)
        if val is not None:
            raw[key] = val
    if getattr(args, "radio_range", None) is not None:
        raw["radio.range"] = args.radio_range
    if getattr(args, "no_mac_trace", False):
        raw["trace_mac"] = "false"
    return validate_config(raw)


def cmd_run(args) -> int:
    cfg = _build_config(args)
    result = run_scenario(cfg, trace_path=args.trace)
    if not result.consistent:
        print("error: online metrics disagree with trace recount", file=sys.stderr)
        return 2
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(CSV_HEADER + "\n" + result.row.csv_line() + "\n")
    print(CSV_HEADER)
    print(result.row.csv_line())
    return 0


def cmd_sweep(args) -> int:
    base = _build_config(args)
    spec = SweepSpec(
        base=base,
        protocols=tuple(args.protocols.split(",")),
        node_counts=tuple(int(x) for x in args.node_counts.split(",")),
        speeds=tuple(float(x) for x in args.speeds.split(",")),
        seeds=tuple(int(x) for x in args.seeds.split(",")),
    )
    t0 = time.time()

    def progress(done, total):
        if args.verbose:
            print(f"  {done}/{total} cells ({time.time() - t0:.0f}s)", file=sys.stderr)

    rows, errors = sweep(spec, args.out, workers=args.workers, progress=progress)
    print(f"{rows} rows -> {args.out} in {time.time() - t0:.1f}s", file=sys.stderr)
    for err in errors:
        print(f"error: {err}", file=sys.stderr)
    return 1 if errors else 0


def cmd_metrics(args) -> int:
    counters = recount_trace(args.trace)
    row = MetricsRow.build(args.protocol or "?", args.nodes or 0,
                           args.max_speed if args.max_speed is not None else -1.0,
                           args.seed or 0, counters, args.pkt_size or 512,
                           args.sim_time or 300.0)
    print(CSV_HEADER)
    print(row.csv_line())
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="manetsim",
        description="Deterministic MANET reactive-routing simulator (AODV, DSR, AOMDV)")
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="run one scenario")
    _add_scenario_flags(p_run)
    p_run.add_argument("--trace", help="write the packet-event trace here")
    p_run.add_argument("--out", help="write the metrics row as CSV here")
    p_run.set_defaults(fn=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run the experiment grid")
    _add_scenario_flags(p_sweep)
    p_sweep.add_argument("--out", required=True, help="output CSV path")
    p_sweep.add_argument("--protocols", default="aodv,dsr,aomdv")
    p_sweep.add_argument("--node-counts", default="60,80", dest="node_counts")
    p_sweep.add_argument("--speeds", default="0,10,20,30,40,50,60")
    p_sweep.add_argument("--seeds", default=",".join(str(s) for s in range(1, 11)))
    p_sweep.add_argument("--workers", type=int, default=0, help="0 = all cores")
    p_sweep.add_argument("--verbose", action="store_true")
    p_sweep.set_defaults(fn=cmd_sweep)

    p_metrics = sub.add_parser("metrics", help="recompute metrics from a trace file")
    p_metrics.add_argument("--trace", required=True)
    p_metrics.add_argument("--protocol")
    p_metrics.add_argument("--nodes", type=int)
    p_metrics.add_argument("--max-speed", type=float, dest="max_speed")
    p_metrics.add_argument("--seed", type=int)
    p_metrics.add_argument("--pkt-size", type=int, dest="pkt_size")
    p_metrics.add_argument("--time", type=float, dest="sim_time")
    p_metrics.set_defaults(fn=cmd_metrics)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
