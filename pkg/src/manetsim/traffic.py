"""Constant-bit-rate sources over an unacknowledged, UDP-like agent."""

from __future__ import annotations

from dataclasses import dataclass

from .core import US_PER_S, EventKind, to_us
from .packets import Packet


@dataclass(frozen=True)
class CbrFlow:
    src: int
    dst: int
    rate: float            # packets per second
    pkt_size: int
    start_at: float        # seconds
    stop_at: float         # seconds

    def __post_init__(self):
        if self.src == self.dst:
            raise ValueError("flow source equals destination")
        if self.rate <= 0:
            raise ValueError("flow rate must be positive")
        if not self.start_at < self.stop_at:
            raise ValueError("flow must start before it stops")


class CbrSource:
    """Emits fixed-size packets at start + k/rate for k = 0, 1, ... while < stop."""

    def __init__(self, sim, flow: CbrFlow):
        self.sim = sim
        self.flow = flow
        self.period_us = round(US_PER_S / flow.rate)
        self.stop_us = to_us(flow.stop_at)

    def start(self):
        first = to_us(self.flow.start_at)
        if first < self.stop_us:
            self.sim.engine.schedule_in(first - self.sim.engine.now,
                                        EventKind.TRAFFIC_TICK, self.flow.src,
                                        lambda w=first: self._tick(w))

    def _tick(self, when: int):
        flow = self.flow
        pkt = Packet(self.sim.uids.next(), "DATA", flow.pkt_size,
                     app_src=flow.src, app_dst=flow.dst, ttl=self.sim.cfg.ttl)
        self.sim.trace_agt("s", when, flow.src, pkt)
        self.sim.protocols[flow.src].on_app_send(flow.dst, pkt, when)
        nxt = when + self.period_us
        if nxt < self.stop_us:
            self.sim.engine.schedule_in(nxt - when, EventKind.TRAFFIC_TICK,
                                        flow.src, lambda w=nxt: self._tick(w))


def draw_flows(rng, n_nodes: int, count: int, rate: float, pkt_size: int,
               sim_time: float) -> list[CbrFlow]:
    """Random source/destination pairs, no pair repeated, seeded."""
    if count == 0:
        return []
    if n_nodes < 2:
        raise ValueError("need at least 2 nodes for traffic")
    if count > n_nodes * (n_nodes - 1):
        raise ValueError("more flows than distinct (src, dst) pairs")
    stop = sim_time - 5.0 if sim_time > 10.0 else sim_time
    pairs: set[tuple[int, int]] = set()
    flows = []
    while len(flows) < count:
        src = rng.randrange(n_nodes)
        dst = rng.randrange(n_nodes)
        if src == dst or (src, dst) in pairs:
            continue
        pairs.add((src, dst))
        start = round(rng.uniform(1.0, 5.0), 6)
        flows.append(CbrFlow(src, dst, rate, pkt_size, start, stop))
    return flows
