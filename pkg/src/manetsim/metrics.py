"""The four performance measures, online counters, and trace recount.

pdf           = (Prec / Psnd) * 100          (% of application data delivered)
throughput    = Prec / Psnd                  (ratio form; equals pdf/100)
avg e2e delay = mean(receive - send) over delivered data packets
overhead      = hop-wise transmissions of routing control packets

The recount path reads a finished trace file and recomputes everything
independently of the online counters; the two must agree exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .core import US_PER_S
from .trace import parse_time

CONTROL_KINDS = ("RREQ", "RREP", "RERR")


class NoTraffic(Exception):
    pass


class NoDeliveries(Exception):
    pass


def pdf(psnd: int, prec: int) -> float:
    if psnd == 0:
        raise NoTraffic("no data packets sent")
    return (prec / psnd) * 100.0


def throughput_ratio(psnd: int, prec: int) -> float:
    # Defined as received/sent; derived from pdf so the ratio == pdf/100
    # identity is exact in floating point, not just algebraically.
    return pdf(psnd, prec) / 100.0


def avg_e2e_delay(deliveries: list[tuple[int, int]]) -> float:
    """Mean over delivered packets of (receive - send), in seconds."""
    if not deliveries:
        raise NoDeliveries("no delivered packets")
    total = 0
    for ts, tr in deliveries:
        if tr < ts:
            raise ValueError("delivery precedes send")
        total += tr - ts
    return total / len(deliveries) / US_PER_S


@dataclass
class Counters:
    """Raw tallies a metrics row is computed from."""
    psnd: int = 0
    prec: int = 0
    delay_total_us: int = 0
    overhead_pkts: int = 0
    overhead_bytes: int = 0

    def row_values(self) -> dict:
        vals = {
            "psnd": self.psnd,
            "prec": self.prec,
            "routing_overhead_pkts": self.overhead_pkts,
            "routing_overhead_bytes": self.overhead_bytes,
            "pdf": None, "throughput_ratio": None, "avg_e2e_delay_s": None,
        }
        if self.psnd > 0:
            p = pdf(self.psnd, self.prec)
            vals["pdf"] = p
            vals["throughput_ratio"] = p / 100.0
        if self.prec > 0:
            vals["avg_e2e_delay_s"] = self.delay_total_us / self.prec / US_PER_S
        return vals


class OnlineMetrics:
    """Incremental counters fed by the simulator at trace-emission points."""

    def __init__(self):
        self.c = Counters()
        self._send_time: dict[int, int] = {}

    def on_agt_send(self, uid: int, t_us: int):
        self.c.psnd += 1
        self._send_time[uid] = t_us

    def on_agt_recv(self, uid: int, t_us: int):
        self.c.prec += 1
        self.c.delay_total_us += t_us - self._send_time[uid]

    def on_rtr_control_tx(self, size: int):
        self.c.overhead_pkts += 1
        self.c.overhead_bytes += size


def recount_trace(path: str) -> Counters:
    """Recompute counters from a trace file, independent of the online path."""
    c = Counters()
    send_time: dict[int, int] = {}
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            op, t, _node, layer, kind, uid = parts[0], parts[1], parts[2], parts[3], parts[4], parts[5]
            if layer == "AGT" and kind == "DATA":
                if op == "s":
                    c.psnd += 1
                    send_time[int(uid)] = parse_time(t)
                elif op == "r":
                    c.prec += 1
                    c.delay_total_us += parse_time(t) - send_time[int(uid)]
            elif layer == "RTR" and kind in CONTROL_KINDS and (op == "s" or op == "f"):
                c.overhead_pkts += 1
                c.overhead_bytes += int(parts[6])
    return c


CSV_HEADER = ("protocol,nodes,max_speed,seed,psnd,prec,pdf,throughput_ratio,"
              "throughput_bps,avg_e2e_delay_s,routing_overhead_pkts,routing_overhead_bytes")


@dataclass
class MetricsRow:
    protocol: str
    nodes: int
    max_speed: float
    seed: int
    psnd: int
    prec: int
    pdf: Optional[float]
    throughput_ratio: Optional[float]
    throughput_bps: Optional[float]
    avg_e2e_delay_s: Optional[float]
    routing_overhead_pkts: int
    routing_overhead_bytes: int

    @staticmethod
    def build(protocol: str, nodes: int, max_speed: float, seed: int,
              counters: Counters, pkt_size: int, sim_time_s: float) -> "MetricsRow":
        vals = counters.row_values()
        bps = None
        if vals["pdf"] is not None:
            bps = counters.prec * pkt_size * 8 / sim_time_s
        return MetricsRow(
            protocol=protocol, nodes=nodes, max_speed=max_speed, seed=seed,
            psnd=counters.psnd, prec=counters.prec,
            pdf=vals["pdf"], throughput_ratio=vals["throughput_ratio"],
            throughput_bps=bps, avg_e2e_delay_s=vals["avg_e2e_delay_s"],
            routing_overhead_pkts=counters.overhead_pkts,
            routing_overhead_bytes=counters.overhead_bytes,
        )

    def csv_line(self) -> str:
        def cell(v):
            return "" if v is None else (repr(v) if isinstance(v, float) else str(v))
        return ",".join(cell(v) for v in (
            self.protocol, self.nodes, self.max_speed, self.seed,
            self.psnd, self.prec, self.pdf, self.throughput_ratio,
            self.throughput_bps, self.avg_e2e_delay_s,
            self.routing_overhead_pkts, self.routing_overhead_bytes))
