"""Protocol-neutral routing contract.

Every protocol interacts with the world only through the owning
simulation: phy sends, timer scheduling, trace emission, and handing
DATA up to the local traffic sink.  Data packets that arrive while no
route is known wait in a per-destination PendingBuffer until discovery
succeeds, times out, or pushes them out.
"""

from __future__ import annotations

from collections import deque

from .core import EventKind, to_us
from .packets import Packet


class PendingBuffer:
    """Per-destination FIFO of data packets awaiting a route.

    Bounded per destination; when full the oldest entry makes room.
    Entries older than the timeout are dropped on any access.
    """

    def __init__(self, capacity: int, timeout_s: float, on_drop):
        self.capacity = capacity
        self.timeout_us = to_us(timeout_s)
        self.on_drop = on_drop          # fn(pkt, t, reason)
        self._q: dict[int, deque] = {}

    def _purge(self, dst: int, t: int):
        q = self._q.get(dst)
        if not q:
            return
        while q and t - q[0][1] > self.timeout_us:
            pkt, _ = q.popleft()
            self.on_drop(pkt, t, "NO_ROUTE")

    def push(self, dst: int, pkt: Packet, t: int):
        self._purge(dst, t)
        q = self._q.setdefault(dst, deque())
        if len(q) >= self.capacity:
            old, _ = q.popleft()
            self.on_drop(old, t, "NO_ROUTE")
        q.append((pkt, t))

    def pop_all(self, dst: int, t: int) -> list[Packet]:
        self._purge(dst, t)
        q = self._q.pop(dst, None)
        return [pkt for pkt, _ in q] if q else []

    def has(self, dst: int, t: int) -> bool:
        self._purge(dst, t)
        return bool(self._q.get(dst))

    def drop_dst(self, dst: int, t: int):
        for pkt in self.pop_all(dst, t):
            self.on_drop(pkt, t, "NO_ROUTE")

    def drop_all(self, t: int):
        for dst in list(self._q):
            self.drop_dst(dst, t)


class _Discovery:
    __slots__ = ("attempt", "timer")

    def __init__(self):
        self.attempt = 0
        self.timer = None


class RoutingProtocol:
    """Base class: common discovery retry loop and buffer wiring.

    Subclasses implement _send_rreq plus the four callbacks they care
    about; shared policy (retry count, waits, buffering) lives here so
    the three protocols stay comparable.
    """

    def __init__(self, sim, node: int):
        self.sim = sim
        self.node = node
        cfg = sim.cfg
        self.buffer = PendingBuffer(cfg.buffer_capacity, cfg.buffer_timeout,
                                    self._drop_buffered)
        self.rreq_retries = 2
        self.retry_wait_s = 1.0
        self._pending: dict[int, _Discovery] = {}
        self.last_app_send: dict[int, int] = {}
        self.recent_send_window_us = to_us(2.0)

    # -- required protocol surface ---------------------------------------

    def on_app_send(self, dst: int, pkt: Packet, t: int):
        raise NotImplementedError

    def on_packet(self, pkt: Packet, from_node: int, t: int):
        raise NotImplementedError

    def on_link_failure(self, next_hop: int, pkt: Packet, t: int):
        raise NotImplementedError

    def on_timer(self, timer_id, t: int):
        if isinstance(timer_id, tuple) and timer_id[0] == "disc":
            self._discovery_timer(timer_id[1], t)

    # -- shared plumbing --------------------------------------------------

    def _drop_buffered(self, pkt: Packet, t: int, reason: str):
        self.sim.trace_rtr("d", t, self.node, pkt, reason=reason)

    def drop(self, pkt: Packet, t: int, reason: str):
        self.sim.trace_rtr("d", t, self.node, pkt, reason=reason)

    def _send_rreq(self, dst: int, t: int):
        raise NotImplementedError

    def discovery_pending(self, dst: int) -> bool:
        return dst in self._pending

    def ensure_discovery(self, dst: int, t: int):
        if dst in self._pending:
            return
        disc = _Discovery()
        self._pending[dst] = disc
        self._send_rreq(dst, t)
        self._arm_retry(dst, disc, t)

    def _arm_retry(self, dst: int, disc: _Discovery, t: int):
        wait = to_us(self.retry_wait_s * (2 ** disc.attempt))
        disc.timer = self.sim.schedule_timer(self.node, wait, ("disc", dst))

    def _discovery_timer(self, dst: int, t: int):
        disc = self._pending.get(dst)
        if disc is None:
            return
        disc.attempt += 1
        if disc.attempt > self.rreq_retries:
            # discovery exhausted: everything waiting on this destination dies
            del self._pending[dst]
            self.buffer.drop_dst(dst, t)
            return
        self._send_rreq(dst, t)
        self._arm_retry(dst, disc, t)

    def discovery_succeeded(self, dst: int, t: int) -> list[Packet]:
        disc = self._pending.pop(dst, None)
        if disc is not None and disc.timer is not None:
            self.sim.engine.cancel(disc.timer)
        return self.buffer.pop_all(dst, t)

    def recently_active(self, dst: int, t: int) -> bool:
        last = self.last_app_send.get(dst)
        return (last is not None and t - last <= self.recent_send_window_us) \
            or self.buffer.has(dst, t)

    def forward_ttl(self, pkt: Packet, t: int) -> int | None:
        """TTL left after one more hop, or None (dropped) if exhausted."""
        if pkt.ttl - 1 < 0:
            self.drop(pkt, t, "TTL")
            return None
        return pkt.ttl - 1

    def finish(self, t: int):
        self.buffer.drop_all(t)
