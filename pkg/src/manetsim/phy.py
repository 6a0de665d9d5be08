"""Unit-disk radio with a simplified MAC.

Frames reach every node within `range` of the transmitter at transmission
start, after tx_delay = size*8/bandwidth plus distance/c propagation.
Unicast to an unreachable next hop surfaces as a LinkFailure notice to the
sender's routing layer after a fixed detection delay.  Broadcasts are
fire-and-forget (no retries, no failure notices), matching 802.11
broadcast semantics.  There is no contention or collision model; an
optional independent Bernoulli per-hop loss stands in for channel errors.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import Engine, Event, EventKind, to_us
from .packets import BROADCAST, Packet

LIGHT_SPEED = 3.0e8


class UnknownNode(Exception):
    pass


@dataclass
class RadioConfig:
    range: float = 250.0               # meters
    bandwidth: float = 2_000_000.0     # bits/s
    per_hop_loss: float = 0.0          # independent Bernoulli per reception
    link_fail_detect_delay: float = 0.05  # seconds until a dead unicast is noticed
    # Contention stand-in: broadcast receptions overlapping an earlier one
    # at the same radio are lost (unicast rides on ACK/retry and survives),
    # and flood re-broadcasts are jittered to break synchronization.
    collisions: bool = True
    rebroadcast_jitter: float = 0.010  # seconds, uniform upper bound

    def __post_init__(self):
        if self.range <= 0:
            raise ValueError("range must be positive")
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        if not 0.0 <= self.per_hop_loss <= 1.0:
            raise ValueError("per_hop_loss must be in [0,1]")
        if self.rebroadcast_jitter < 0:
            raise ValueError("rebroadcast_jitter must be >= 0")


class Phy:
    """Radio medium shared by all nodes of one simulation.

    The owning simulation supplies position lookups, reachability scans,
    delivery/link-failure sinks and MAC-layer tracing through the `sim`
    object to avoid circular wiring.
    """

    def __init__(self, sim, engine: Engine, cfg: RadioConfig, loss_rng):
        self.sim = sim
        self.engine = engine
        self.cfg = cfg
        self.loss_rng = loss_rng
        self._detect_us = to_us(cfg.link_fail_detect_delay)

    # -- delay model ----------------------------------------------------

    def tx_delay_us(self, size: int) -> int:
        return round(size * 8 * 1_000_000 / self.cfg.bandwidth)

    @staticmethod
    def prop_delay_us(distance: float) -> int:
        return round(distance / LIGHT_SPEED * 1_000_000)

    # -- operations -----------------------------------------------------

    def neighbors(self, node: int, t: int) -> list[int]:
        """Node ids at Euclidean distance <= range, excluding node itself."""
        return self.sim.nodes_in_range(node, t)

    def broadcast(self, sender: int, pkt: Packet, t: int):
        """Schedule delivery to every in-range node surviving the loss coin."""
        self.sim.trace_mac("s", t, sender, pkt, BROADCAST)
        tx = self.tx_delay_us(pkt.size)
        if self.cfg.collisions:
            self.sim.mark_rx_busy(sender, t + tx)    # half duplex: own tx blocks rx
        loss = self.cfg.per_hop_loss
        groups: dict[int, list[int]] = {}
        for nbr, dist in self.sim.nodes_in_range_dist(sender, t):
            if loss > 0.0 and self.loss_rng.random() < loss:
                self.sim.trace_mac("d", t, nbr, pkt, BROADCAST, reason="LOSS")
                continue
            when = t + tx + self.prop_delay_us(dist)
            groups.setdefault(when, []).append(nbr)
        for when in sorted(groups):
            receivers = groups[when]
            self.engine.schedule(Event(
                when, EventKind.PACKET_DELIVERY, -1,
                lambda s=sender, p=pkt, rs=receivers, w=when, x=tx:
                    self._deliver_group(s, p, rs, w, x)))

    def _deliver_group(self, sender: int, pkt: Packet, receivers: list[int],
                       when: int, tx: int):
        collisions = self.cfg.collisions
        rx_start = when - tx
        for nbr in receivers:
            if collisions and not self.sim.claim_rx(nbr, rx_start, when):
                # another reception already occupies this radio: frame lost
                self.sim.trace_mac("d", when, nbr, pkt, BROADCAST, reason="LOSS")
                continue
            self.sim.trace_mac("r", when, nbr, pkt, BROADCAST)
            self.sim.deliver(pkt, sender, nbr, when)

    def unicast(self, sender: int, next_hop: int, pkt: Packet, t: int):
        """Deliver if next_hop is reachable, else notify sender's routing layer.

        Unicast frames ride on MAC acknowledgment and retransmission, so
        contention never loses them; only range (or the loss coin) does.
        """
        if not self.sim.node_exists(next_hop):
            raise UnknownNode(f"node {next_hop} not in scenario")
        self.sim.trace_mac("s", t, sender, pkt, next_hop)
        dist = self.sim.distance(sender, next_hop, t)
        lost = self.cfg.per_hop_loss > 0.0 and self.loss_rng.random() < self.cfg.per_hop_loss
        if dist <= self.cfg.range and not lost:
            tx = self.tx_delay_us(pkt.size)
            if self.cfg.collisions:
                self.sim.mark_rx_busy(sender, t + tx)
            when = t + tx + self.prop_delay_us(dist)
            self.engine.schedule(Event(
                when, EventKind.PACKET_DELIVERY, next_hop,
                lambda s=sender, p=pkt, n=next_hop, w=when: self._deliver_one(s, p, n, w)))
        else:
            if lost:
                self.sim.trace_mac("d", t, sender, pkt, next_hop, reason="LOSS")
            when = t + self._detect_us
            self.engine.schedule(Event(
                when, EventKind.TIMER, sender,
                lambda s=sender, n=next_hop, p=pkt, w=when: self.sim.link_failure(s, n, p, w)))

    def _deliver_one(self, sender: int, pkt: Packet, receiver: int, when: int):
        if self.cfg.collisions:
            self.sim.mark_rx_busy(receiver, when)
        self.sim.trace_mac("r", when, receiver, pkt, receiver)
        self.sim.deliver(pkt, sender, receiver, when)
