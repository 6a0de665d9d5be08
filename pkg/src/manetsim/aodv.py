"""Ad-hoc On-demand Distance Vector routing.

Route discovery floods an RREQ identified by (source, broadcast id);
duplicates are suppressed, every node harvests a reverse route to the
source, and the destination (or an intermediate node with a
fresh-enough route) returns an RREP along that reverse path.  Sequence
numbers order route freshness and keep forwarding loop-free.  Link
failures invalidate routes, raise RERRs toward traffic sources, and
trigger re-discovery from the source only.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import to_us
from .packets import Packet
from .routing import RoutingProtocol


@dataclass
class AodvParams:
    active_route_lifetime: float = 10.0   # seconds; refreshed on use
    reverse_path_lifetime: float = 6.0
    seen_cache_expiry: float = 6.0
    rreq_retries: int = 2
    retry_wait: float = 1.0               # doubles per retry
    rreq_size: int = 48
    rrep_size: int = 44
    rerr_size: int = 32


class Rreq:
    __slots__ = ("src", "src_seq", "bid", "dst", "dst_seq", "hop_count")

    def __init__(self, src, src_seq, bid, dst, dst_seq, hop_count):
        self.src = src
        self.src_seq = src_seq
        self.bid = bid
        self.dst = dst
        self.dst_seq = dst_seq
        self.hop_count = hop_count


class Rrep:
    __slots__ = ("src", "dst", "dst_seq", "hop_count", "lifetime_us")

    def __init__(self, src, dst, dst_seq, hop_count, lifetime_us):
        self.src = src              # discovery originator the reply travels to
        self.dst = dst              # route target the reply advertises
        self.dst_seq = dst_seq
        self.hop_count = hop_count
        self.lifetime_us = lifetime_us


class Rerr:
    __slots__ = ("entries",)

    def __init__(self, entries):
        self.entries = entries      # tuple of (dst, dst_seq)


class RouteEntry:
    __slots__ = ("dst", "next_hop", "hop_count", "dst_seq", "expires_at", "valid")

    def __init__(self, dst, next_hop, hop_count, dst_seq, expires_at):
        self.dst = dst
        self.next_hop = next_hop
        self.hop_count = hop_count
        self.dst_seq = dst_seq
        self.expires_at = expires_at
        self.valid = True

    def usable(self, t: int) -> bool:
        return self.valid and t < self.expires_at


class Aodv(RoutingProtocol):
    name = "aodv"

    def __init__(self, sim, node, params: AodvParams | None = None):
        super().__init__(sim, node)
        self.p = params or AodvParams()
        self.rreq_retries = self.p.rreq_retries
        self.retry_wait_s = self.p.retry_wait
        self.seq = 0
        self.bid = 0
        self.table: dict[int, RouteEntry] = {}
        self.seen: dict[tuple[int, int], int] = {}   # (src, bid) -> suppression expiry
        self._active_us = to_us(self.p.active_route_lifetime)
        self._reverse_us = to_us(self.p.reverse_path_lifetime)
        self._seen_us = to_us(self.p.seen_cache_expiry)

    # -- table ------------------------------------------------------------

    def update_route(self, dst: int, next_hop: int, hop_count: int, dst_seq: int,
                     lifetime_us: int, t: int) -> bool:
        """Accept a candidate iff it is fresher, or equally fresh and either
        shorter or replacing an unusable entry.  Stored dst_seq never
        decreases."""
        cur = self.table.get(dst)
        if cur is not None:
            if dst_seq < cur.dst_seq:
                return False
            if dst_seq == cur.dst_seq and hop_count >= cur.hop_count and cur.usable(t):
                return False
        self.table[dst] = RouteEntry(dst, next_hop, hop_count, dst_seq, t + lifetime_us)
        self.sim.note_route_change(self, dst)
        return True

    def refresh(self, entry: RouteEntry, t: int):
        entry.expires_at = max(entry.expires_at, t + self._active_us)

    def usable_route(self, dst: int, t: int) -> RouteEntry | None:
        e = self.table.get(dst)
        return e if e is not None and e.usable(t) else None

    # -- application data ---------------------------------------------------

    def on_app_send(self, dst: int, pkt: Packet, t: int):
        self.last_app_send[dst] = t
        entry = self.usable_route(dst, t)
        if entry is not None:
            self._send_data(pkt, entry, t)
        else:
            self.buffer.push(dst, pkt, t)
            self.ensure_discovery(dst, t)

    def _send_data(self, pkt: Packet, entry: RouteEntry, t: int):
        self.refresh(entry, t)
        if self.node != pkt.app_src:
            self.sim.trace_rtr("f", t, self.node, pkt)
        self.sim.phy.unicast(self.node, entry.next_hop, pkt, t)

    # -- discovery ----------------------------------------------------------

    def _send_rreq(self, dst: int, t: int):
        self.seq += 1
        self.bid += 1
        known = self.table.get(dst)
        body = Rreq(self.node, self.seq, self.bid, dst,
                    known.dst_seq if known is not None else 0, 0)
        pkt = Packet(self.sim.uids.next(), "RREQ", self.p.rreq_size,
                     app_src=self.node, app_dst=dst, ttl=self.sim.cfg.ttl, body=body)
        self.seen[(self.node, self.bid)] = t + self._seen_us
        self.sim.trace_rtr("s", t, self.node, pkt)
        self.sim.phy.broadcast(self.node, pkt, t)

    def _handle_rreq(self, pkt: Packet, from_node: int, t: int):
        b: Rreq = pkt.body
        key = (b.src, b.bid)
        exp = self.seen.get(key)
        if exp is not None and t < exp:
            return
        self.seen[key] = t + self._seen_us
        hops_to_src = b.hop_count + 1
        self.update_route(b.src, from_node, hops_to_src, b.src_seq, self._reverse_us, t)

        if self.node == b.dst:
            # fresh reply from the destination itself, then keep the flood
            # moving so every reached node transmits the request exactly once
            self.seq = max(self.seq, b.dst_seq) + 1
            self._send_rrep(Rrep(b.src, self.node, self.seq, 0, self._active_us),
                            from_node, t, originate=True)
            self._forward_rreq(pkt, b, t)
            return

        entry = self.usable_route(b.dst, t)
        if entry is not None and entry.dst_seq >= b.dst_seq:
            # intermediate node answers from its table without re-flooding
            remaining = entry.expires_at - t
            self._send_rrep(Rrep(b.src, b.dst, entry.dst_seq, entry.hop_count, remaining),
                            from_node, t, originate=True)
            return

        self._forward_rreq(pkt, b, t)

    def _forward_rreq(self, pkt: Packet, b: Rreq, t: int):
        ttl = self.forward_ttl(pkt, t)
        if ttl is None:
            return
        fwd = pkt.copy(ttl=ttl, body=Rreq(b.src, b.src_seq, b.bid, b.dst,
                                          b.dst_seq, b.hop_count + 1))
        self.sim.trace_rtr("f", t, self.node, fwd)
        self.sim.jittered_broadcast(self.node, fwd, t)

    def _send_rrep(self, body: Rrep, next_hop: int, t: int, originate: bool):
        pkt = Packet(self.sim.uids.next(), "RREP", self.p.rrep_size,
                     app_src=body.dst, app_dst=body.src, ttl=self.sim.cfg.ttl, body=body)
        self.sim.trace_rtr("s" if originate else "f", t, self.node, pkt)
        self.sim.phy.unicast(self.node, next_hop, pkt, t)

    def _handle_rrep(self, pkt: Packet, from_node: int, t: int):
        b: Rrep = pkt.body
        hops = b.hop_count + 1
        self.update_route(b.dst, from_node, hops, b.dst_seq, b.lifetime_us, t)
        if self.node == b.src:
            entry = self.usable_route(b.dst, t)
            if entry is None:
                return      # stale reply; keep any pending discovery running
            for data in self.discovery_succeeded(b.dst, t):
                self._send_data(data, entry, t)
            return
        rev = self.usable_route(b.src, t)
        if rev is None:
            self.drop(pkt, t, "NO_ROUTE")     # reverse path expired underneath us
            return
        ttl = self.forward_ttl(pkt, t)
        if ttl is None:
            return
        rev.expires_at = max(rev.expires_at, t + self._reverse_us)
        fwd = pkt.copy(ttl=ttl, body=Rrep(b.src, b.dst, b.dst_seq, hops, b.lifetime_us))
        self.sim.trace_rtr("f", t, self.node, fwd)
        self.sim.phy.unicast(self.node, rev.next_hop, fwd, t)

    # -- failure handling -----------------------------------------------------

    def _invalidate_via(self, next_hop: int, t: int) -> list[tuple[int, int]]:
        broken = []
        for dst, e in self.table.items():
            if e.valid and e.next_hop == next_hop:
                e.valid = False
                e.dst_seq += 1
                broken.append((dst, e.dst_seq))
                self.sim.note_route_change(self, dst)
        return broken

    def _send_rerr(self, entries: list[tuple[int, int]], t: int, originate: bool):
        body = Rerr(tuple(entries))
        pkt = Packet(self.sim.uids.next(), "RERR", self.p.rerr_size,
                     app_src=self.node, app_dst=-1, ttl=1, body=body)
        self.sim.trace_rtr("s" if originate else "f", t, self.node, pkt)
        self.sim.phy.broadcast(self.node, pkt, t)

    def on_link_failure(self, next_hop: int, pkt: Packet, t: int):
        broken = self._invalidate_via(next_hop, t)
        if broken:
            self._send_rerr(broken, t, originate=True)
        if pkt.kind == "DATA":
            if self.node == pkt.app_src:
                self.buffer.push(pkt.app_dst, pkt, t)
                self.ensure_discovery(pkt.app_dst, t)
            else:
                self.drop(pkt, t, "NO_ROUTE")
        # failed RREPs are simply lost; the originator's retry recovers
        for dst, _ in broken:
            if self.recently_active(dst, t):
                self.ensure_discovery(dst, t)

    def _handle_rerr(self, pkt: Packet, from_node: int, t: int):
        b: Rerr = pkt.body
        propagate = []
        for dst, seq in b.entries:
            e = self.table.get(dst)
            if e is not None and e.valid and e.next_hop == from_node:
                e.valid = False
                e.dst_seq = max(e.dst_seq, seq)
                propagate.append((dst, e.dst_seq))
                self.sim.note_route_change(self, dst)
        if propagate:
            self._send_rerr(propagate, t, originate=False)
            for dst, _ in propagate:
                if self.recently_active(dst, t):
                    self.ensure_discovery(dst, t)

    # -- dispatch ---------------------------------------------------------------

    def on_packet(self, pkt: Packet, from_node: int, t: int):
        kind = pkt.kind
        if kind == "RREQ":
            self._handle_rreq(pkt, from_node, t)
        elif kind == "RREP":
            self._handle_rrep(pkt, from_node, t)
        elif kind == "RERR":
            self._handle_rerr(pkt, from_node, t)
        elif kind == "DATA":
            ttl = self.forward_ttl(pkt, t)
            if ttl is None:
                return
            entry = self.usable_route(pkt.app_dst, t)
            if entry is None:
                self.drop(pkt, t, "NO_ROUTE")
                e = self.table.get(pkt.app_dst)
                if e is not None and e.valid:
                    # fresh invalidation: bump once and tell the neighborhood
                    e.valid = False
                    e.dst_seq += 1
                    self.sim.note_route_change(self, pkt.app_dst)
                    self._send_rerr([(pkt.app_dst, e.dst_seq)], t, originate=True)
                elif e is None:
                    self._send_rerr([(pkt.app_dst, 1)], t, originate=True)
                return
            self._send_data(pkt.copy(ttl=ttl), entry, t)
