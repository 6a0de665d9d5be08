"""One simulation run: nodes, motion, radio, protocols, traffic, trace.

Node positions are closed-form functions of time (straight-line legs),
mirrored into flat numpy arrays so neighbor scans stay cheap at 60-80
nodes.  The scalar and vectorized position paths use identical
floating-point operations, so range decisions never depend on which
path computed them.
"""

from __future__ import annotations

import math

import numpy as np

from .aodv import Aodv, AodvParams
from .aomdv import Aomdv, AomdvParams
from .core import (Engine, Event, EventKind, Rng, TAG_JITTER, TAG_MOBILITY,
                   TAG_PHY_LOSS, TAG_PLACEMENT, TAG_TRAFFIC, to_us)
from .dsr import Dsr, DsrParams
from .metrics import OnlineMetrics
from .mobility import Area, NodeMotion, next_leg
from .packets import Packet, UidSource
from .phy import Phy
from .trace import TraceWriter
from .traffic import CbrSource, draw_flows

_PARAM_CLASSES = {"aodv": AodvParams, "dsr": DsrParams, "aomdv": AomdvParams}
_PROTO_CLASSES = {"aodv": Aodv, "dsr": Dsr, "aomdv": Aomdv}


def _build_params(protocol: str, overrides: dict):
    params = _PARAM_CLASSES[protocol]()
    for key, value in overrides.items():
        if not hasattr(params, key):
            raise ValueError(f"{protocol}.{key}: unknown protocol parameter")
        current = getattr(params, key)
        if isinstance(current, bool) and isinstance(value, str):
            value = value.strip().lower() in ("1", "true", "yes", "on")
        else:
            value = type(current)(value)
        setattr(params, key, value)
    return params


class Simulation:
    def __init__(self, cfg, trace_path: str, checks=None):
        self.cfg = cfg
        self.checks = checks
        self.engine = Engine()
        self.rng = Rng(cfg.seed)
        self.uids = UidSource()
        self.online = OnlineMetrics()
        self.trace_path = trace_path
        self.writer = TraceWriter(trace_path)
        self.area = Area(cfg.area_width, cfg.area_height)
        self.n = cfg.nodes
        self.end_us = to_us(cfg.sim_time)
        self.packet_tap = None          # optional test hook: fn(pkt, frm, to, t)

        # -- placement and motion
        if cfg.positions is not None:
            if len(cfg.positions) != self.n:
                raise ValueError("positions length must equal node count")
            start = [tuple(map(float, p)) for p in cfg.positions]
        else:
            prng = self.rng.substream(TAG_PLACEMENT)
            start = [(prng.uniform(0.0, self.area.width),
                      prng.uniform(0.0, self.area.height)) for _ in range(self.n)]
        self._mob_rngs = [self.rng.substream(TAG_MOBILITY, i) for i in range(self.n)]
        self.motions: list[NodeMotion] = []
        self._ox = np.zeros(self.n)
        self._oy = np.zeros(self.n)
        self._vx = np.zeros(self.n)
        self._vy = np.zeros(self.n)
        self._depart = np.zeros(self.n)
        self._dur = np.zeros(self.n)
        for i, pos in enumerate(start):
            motion = next_leg(self._mob_rngs[i], self.area, i, pos,
                              cfg.max_speed, 0, cfg.pause)
            self._install_motion(i, motion)
            if cfg.max_speed > 0:
                self._schedule_leg_end(i, motion)

        # -- radio, protocols, traffic
        self.phy = Phy(self, self.engine, cfg.radio,
                       self.rng.substream(TAG_PHY_LOSS))
        self._rx_busy = np.zeros(self.n, dtype=np.int64)
        self._jitter_rng = self.rng.substream(TAG_JITTER)
        self._jitter_us = to_us(cfg.radio.rebroadcast_jitter)
        proto_cls = _PROTO_CLASSES[cfg.protocol]
        params = _build_params(cfg.protocol, cfg.protocol_params.get(cfg.protocol, {}))
        self.protocols = [proto_cls(self, i, params) for i in range(self.n)]
        self._received: list[set[int]] = [set() for _ in range(self.n)]

        if cfg.flow_list is not None:
            self.flows = list(cfg.flow_list)
        elif cfg.flows > 0:
            self.flows = draw_flows(self.rng.substream(TAG_TRAFFIC), self.n,
                                    cfg.flows, cfg.rate, cfg.pkt_size, cfg.sim_time)
        else:
            self.flows = []
        for flow in self.flows:
            if not (0 <= flow.src < self.n and 0 <= flow.dst < self.n):
                raise ValueError(f"flow endpoints out of range: {flow}")
            CbrSource(self, flow).start()

    # -- motion ------------------------------------------------------------

    def _install_motion(self, node: int, motion: NodeMotion):
        if node < len(self.motions):
            self.motions[node] = motion
        else:
            self.motions.append(motion)
        travel = motion.travel_us
        ox, oy = motion.origin
        wx, wy = motion.waypoint
        self._ox[node] = ox
        self._oy[node] = oy
        self._depart[node] = float(motion.depart_at)
        self._dur[node] = float(travel)
        if travel > 0:
            self._vx[node] = (wx - ox) / travel
            self._vy[node] = (wy - oy) / travel
        else:
            self._vx[node] = 0.0
            self._vy[node] = 0.0

    def _schedule_leg_end(self, node: int, motion: NodeMotion):
        when = motion.arrive_at + to_us(motion.pause)
        if when > self.end_us:
            return
        self.engine.schedule(Event(when, EventKind.MOBILITY_UPDATE, node,
                                   lambda n=node, m=motion, w=when: self._next_leg(n, m, w)))

    def _next_leg(self, node: int, finished: NodeMotion, when: int):
        motion = next_leg(self._mob_rngs[node], self.area, node,
                          finished.waypoint, self.cfg.max_speed, when, self.cfg.pause)
        self._install_motion(node, motion)
        self._schedule_leg_end(node, motion)

    def teleport(self, node: int, x: float, y: float, t: int):
        """Test helper: pin a node at (x, y) from time t on."""
        self._install_motion(node, NodeMotion(node, (x, y), (x, y), 0.0, t, 0.0))

    def position_of(self, node: int, t: int) -> tuple[float, float]:
        dt = min(max(float(t) - self._depart[node], 0.0), self._dur[node])
        return (self._ox[node] + self._vx[node] * dt,
                self._oy[node] + self._vy[node] * dt)

    def distance(self, a: int, b: int, t: int) -> float:
        ax, ay = self.position_of(a, t)
        bx, by = self.position_of(b, t)
        dx = ax - bx
        dy = ay - by
        return math.sqrt(dx * dx + dy * dy)

    def node_exists(self, node: int) -> bool:
        return 0 <= node < self.n

    def nodes_in_range_dist(self, node: int, t: int) -> list[tuple[int, float]]:
        tf = float(t)
        dt = np.clip(tf - self._depart, 0.0, self._dur)
        xs = self._ox + self._vx * dt
        ys = self._oy + self._vy * dt
        dx = xs - xs[node]
        dy = ys - ys[node]
        d2 = dx * dx + dy * dy
        r = self.cfg.radio.range
        mask = d2 <= r * r
        mask[node] = False
        idx = np.nonzero(mask)[0]
        dist = np.sqrt(d2[idx])
        return [(int(i), float(d)) for i, d in zip(idx, dist)]

    def nodes_in_range(self, node: int, t: int) -> list[int]:
        return [i for i, _ in self.nodes_in_range_dist(node, t)]

    # -- dispatch ------------------------------------------------------------

    def deliver(self, pkt: Packet, from_node: int, to_node: int, t: int):
        if self.packet_tap is not None:
            self.packet_tap(pkt, from_node, to_node, t)
        if pkt.kind == "DATA" and pkt.app_dst == to_node:
            seen = self._received[to_node]
            if pkt.uid in seen:
                self.trace_agt("d", t, to_node, pkt, reason="DUP")
            else:
                seen.add(pkt.uid)
                self.trace_agt("r", t, to_node, pkt)
            return
        self.protocols[to_node].on_packet(pkt, from_node, t)

    def link_failure(self, sender: int, next_hop: int, pkt: Packet, t: int):
        self.protocols[sender].on_link_failure(next_hop, pkt, t)

    # -- radio occupancy (contention stand-in) --------------------------------

    def mark_rx_busy(self, node: int, until: int):
        if until > self._rx_busy[node]:
            self._rx_busy[node] = until

    def claim_rx(self, node: int, start: int, until: int) -> bool:
        """Reserve the radio for one reception; False if already occupied."""
        if start < self._rx_busy[node]:
            return False
        if until > self._rx_busy[node]:
            self._rx_busy[node] = until
        return True

    def jittered_broadcast(self, node: int, pkt: Packet, t: int):
        """Flood forwarding is delayed a little to break the synchronized
        re-broadcast bursts a real MAC would arbitrate."""
        if self._jitter_us <= 0:
            self.phy.broadcast(node, pkt, t)
            return
        delay = self._jitter_rng.randrange(self._jitter_us + 1)
        if delay == 0:
            self.phy.broadcast(node, pkt, t)
        else:
            self.engine.schedule(Event(t + delay, EventKind.TIMER, node,
                                       lambda n=node, p=pkt, w=t + delay:
                                       self.phy.broadcast(n, p, w)))

    def schedule_timer(self, node: int, delay_us: int, timer_id) -> Event:
        when = self.engine.now + delay_us
        return self.engine.schedule(Event(
            when, EventKind.TIMER, node,
            lambda n=node, tid=timer_id, w=when: self.protocols[n].on_timer(tid, w)))

    # -- tracing ---------------------------------------------------------------

    def trace_agt(self, op: str, t: int, node: int, pkt: Packet, reason: str | None = None):
        self.writer.emit(op, t, node, "AGT", pkt.kind, pkt.uid, pkt.size,
                         pkt.app_src, pkt.app_dst, reason)
        if op == "s":
            self.online.on_agt_send(pkt.uid, t)
        elif op == "r":
            self.online.on_agt_recv(pkt.uid, t)

    def trace_rtr(self, op: str, t: int, node: int, pkt: Packet, reason: str | None = None):
        self.writer.emit(op, t, node, "RTR", pkt.kind, pkt.uid, pkt.size,
                         pkt.app_src, pkt.app_dst, reason)
        if pkt.kind != "DATA" and (op == "s" or op == "f"):
            self.online.on_rtr_control_tx(pkt.size)

    def trace_mac(self, op: str, t: int, node: int, pkt: Packet, dst: int,
                  reason: str | None = None):
        if self.cfg.trace_mac:
            self.writer.emit(op, t, node, "MAC", pkt.kind, pkt.uid, pkt.size,
                             pkt.app_src, pkt.app_dst, reason)

    # -- invariant hooks (enabled only when a checker is attached) ---------------

    def note_route_change(self, protocol, dst: int):
        if self.checks is not None:
            self.checks.route_change(self, protocol.node, dst)

    def note_aomdv_paths(self, protocol, dst: int, entry):
        if self.checks is not None:
            self.checks.aomdv_paths(self, protocol.node, dst, entry)

    def note_aomdv_advertised(self, protocol, dst: int):
        if self.checks is not None:
            self.checks.aomdv_advertised(self, protocol.node, dst)

    # -- run -----------------------------------------------------------------------

    def run(self) -> int:
        dispatched = self.engine.run_until(self.end_us)
        for proto in self.protocols:
            proto.finish(self.end_us)
        self.writer.close()
        return dispatched
