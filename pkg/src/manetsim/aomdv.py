"""Ad-hoc On-demand Multipath Distance Vector routing.

AODV's discovery flood, but duplicate request copies are mined for
additional loop-free, link-disjoint paths instead of being discarded
outright.  Per destination and sequence number a node fixes an
advertised hop count once; alternates are accepted only when strictly
shorter than it and disjoint from stored paths in both next hop and
last hop.  The destination answers once per distinct first-relay of the
flood, so replies travel back over distinct paths.  On a link failure
only the failed path is pruned; traffic fails over to the next stored
path and re-discovery starts only when a node runs dry.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import to_us
from .packets import Packet
from .routing import RoutingProtocol


@dataclass
class AomdvParams:
    max_paths: int = 3
    active_route_lifetime: float = 10.0
    reverse_path_lifetime: float = 6.0
    seen_cache_expiry: float = 6.0
    rreq_retries: int = 2
    retry_wait: float = 1.0
    rreq_size: int = 52
    rrep_size: int = 48
    rerr_size: int = 32
    advertise_plus_one: bool = True   # advertised = first path hops + 1; False = strict


class Rreq:
    __slots__ = ("src", "src_seq", "bid", "dst", "dst_seq", "hop_count", "first_hop")

    def __init__(self, src, src_seq, bid, dst, dst_seq, hop_count, first_hop):
        self.src = src
        self.src_seq = src_seq
        self.bid = bid
        self.dst = dst
        self.dst_seq = dst_seq
        self.hop_count = hop_count
        self.first_hop = first_hop    # stamped by the first forwarder, then immutable


class Rrep:
    __slots__ = ("src", "dst", "dst_seq", "hop_count", "first_hop", "lifetime_us")

    def __init__(self, src, dst, dst_seq, hop_count, first_hop, lifetime_us):
        self.src = src
        self.dst = dst
        self.dst_seq = dst_seq
        self.hop_count = hop_count
        self.first_hop = first_hop    # destination-side first relay of this reply
        self.lifetime_us = lifetime_us


class Rerr:
    __slots__ = ("entries",)

    def __init__(self, entries):
        self.entries = entries        # tuple of (dst, dst_seq)


class PathRec:
    __slots__ = ("next_hop", "last_hop", "hop_count", "expires_at")

    def __init__(self, next_hop, last_hop, hop_count, expires_at):
        self.next_hop = next_hop
        self.last_hop = last_hop
        self.hop_count = hop_count
        self.expires_at = expires_at


class MultipathEntry:
    __slots__ = ("dst", "dst_seq", "advertised", "paths")

    def __init__(self, dst, dst_seq):
        self.dst = dst
        self.dst_seq = dst_seq
        self.advertised = None        # fixed when the first path of this seq lands
        self.paths: list[PathRec] = []

    def prune_expired(self, t: int):
        self.paths = [p for p in self.paths if t < p.expires_at]

    def first_path(self, t: int) -> PathRec | None:
        self.prune_expired(t)
        return self.paths[0] if self.paths else None


class Aomdv(RoutingProtocol):
    name = "aomdv"

    def __init__(self, sim, node, params: AomdvParams | None = None):
        super().__init__(sim, node)
        self.p = params or AomdvParams()
        self.rreq_retries = self.p.rreq_retries
        self.retry_wait_s = self.p.retry_wait
        self.seq = 0
        self.bid = 0
        self.table: dict[int, MultipathEntry] = {}
        self.seen: dict[tuple[int, int], int] = {}       # (src, bid) -> rebroadcast-done expiry
        self.replied: dict[tuple[int, int], set] = {}    # flood key -> first hops answered
        self._active_us = to_us(self.p.active_route_lifetime)
        self._reverse_us = to_us(self.p.reverse_path_lifetime)
        self._seen_us = to_us(self.p.seen_cache_expiry)

    # -- path set maintenance ----------------------------------------------

    def accept_path(self, dst: int, next_hop: int, last_hop: int, hop_count: int,
                    seq: int, lifetime_us: int, t: int) -> bool:
        entry = self.table.get(dst)
        if entry is None:
            entry = MultipathEntry(dst, seq)
            self.table[dst] = entry
        elif seq > entry.dst_seq:
            # fresher advertisement restarts the whole path set
            entry.dst_seq = seq
            entry.advertised = None
            entry.paths = []
        elif seq < entry.dst_seq:
            return False
        entry.prune_expired(t)
        if entry.advertised is None:
            # first path of this sequence number fixes the advertised value
            entry.advertised = hop_count + (1 if self.p.advertise_plus_one else 0)
            entry.paths = [PathRec(next_hop, last_hop, hop_count, t + lifetime_us)]
            self._note_paths(entry, dst)
            return True
        if hop_count >= entry.advertised:
            return False
        if len(entry.paths) >= self.p.max_paths:
            return False
        if any(p.next_hop == next_hop or p.last_hop == last_hop for p in entry.paths):
            return False
        entry.paths.append(PathRec(next_hop, last_hop, hop_count, t + lifetime_us))
        self._note_paths(entry, dst)
        return True

    def _note_paths(self, entry: MultipathEntry, dst: int):
        self.sim.note_route_change(self, dst)
        self.sim.note_aomdv_paths(self, dst, entry)

    def select_path(self, dst: int, t: int) -> PathRec | None:
        entry = self.table.get(dst)
        if entry is None:
            return None
        return entry.first_path(t)

    # -- application data -----------------------------------------------------

    def on_app_send(self, dst: int, pkt: Packet, t: int):
        self.last_app_send[dst] = t
        path = self.select_path(dst, t)
        if path is not None:
            self._send_data(pkt, path, t)
        else:
            self.buffer.push(dst, pkt, t)
            self.ensure_discovery(dst, t)

    def _send_data(self, pkt: Packet, path: PathRec, t: int):
        path.expires_at = max(path.expires_at, t + self._active_us)
        if self.node != pkt.app_src:
            self.sim.trace_rtr("f", t, self.node, pkt)
        self.sim.phy.unicast(self.node, path.next_hop, pkt, t)

    # -- discovery ----------------------------------------------------------------

    def _send_rreq(self, dst: int, t: int):
        self.seq += 1
        self.bid += 1
        known = self.table.get(dst)
        body = Rreq(self.node, self.seq, self.bid, dst,
                    known.dst_seq if known is not None else 0, 0, None)
        pkt = Packet(self.sim.uids.next(), "RREQ", self.p.rreq_size,
                     app_src=self.node, app_dst=dst, ttl=self.sim.cfg.ttl, body=body)
        self.seen[(self.node, self.bid)] = t + self._seen_us
        self.sim.trace_rtr("s", t, self.node, pkt)
        self.sim.phy.broadcast(self.node, pkt, t)

    def _handle_rreq(self, pkt: Packet, from_node: int, t: int):
        b: Rreq = pkt.body
        if b.src == self.node:
            return                       # own flood echoing back
        key = (b.src, b.bid)
        # every copy, duplicate or not, offers a reverse-path candidate
        last_hop = b.first_hop if b.first_hop is not None else self.node
        self.accept_path(b.src, from_node, last_hop, b.hop_count + 1,
                         b.src_seq, self._reverse_us, t)
        exp = self.seen.get(key)
        first_copy = exp is None or t >= exp
        if first_copy:
            self.seen[key] = t + self._seen_us
        if self.node == b.dst:
            self._reply(b, from_node, t)
            if first_copy:
                self._forward_rreq(pkt, b, t)
            return
        if first_copy:
            self._forward_rreq(pkt, b, t)

    def _forward_rreq(self, pkt: Packet, b: Rreq, t: int):
        ttl = self.forward_ttl(pkt, t)
        if ttl is None:
            return
        self.sim.note_aomdv_advertised(self, b.src)
        first_hop = b.first_hop if b.first_hop is not None else self.node
        fwd = pkt.copy(ttl=ttl, body=Rreq(b.src, b.src_seq, b.bid, b.dst,
                                          b.dst_seq, b.hop_count + 1, first_hop))
        self.sim.trace_rtr("f", t, self.node, fwd)
        self.sim.jittered_broadcast(self.node, fwd, t)

    def _reply(self, b: Rreq, from_node: int, t: int):
        """Answer once per distinct first relay, up to max_paths replies."""
        key = (b.src, b.bid)
        answered = self.replied.setdefault(key, set())
        first_hop = b.first_hop if b.first_hop is not None else from_node
        if first_hop in answered or len(answered) >= self.p.max_paths:
            return
        if not answered:
            # one freshness bump per flood; every reply of the flood shares it
            self.seq = max(self.seq, b.dst_seq) + 1
        answered.add(first_hop)
        body = Rrep(b.src, self.node, self.seq, 0, None, self._active_us)
        pkt = Packet(self.sim.uids.next(), "RREP", self.p.rrep_size,
                     app_src=self.node, app_dst=b.src, ttl=self.sim.cfg.ttl, body=body)
        self.sim.trace_rtr("s", t, self.node, pkt)
        self.sim.phy.unicast(self.node, from_node, pkt, t)

    def _handle_rrep(self, pkt: Packet, from_node: int, t: int):
        b: Rrep = pkt.body
        hops = b.hop_count + 1
        last_hop = b.first_hop if b.first_hop is not None else self.node
        self.accept_path(b.dst, from_node, last_hop, hops, b.dst_seq, b.lifetime_us, t)
        if self.node == b.src:
            path = self.select_path(b.dst, t)
            if path is None:
                return
            for data in self.discovery_succeeded(b.dst, t):
                self._send_data(data, path, t)
            return
        rev = self.select_path(b.src, t)
        if rev is None:
            self.drop(pkt, t, "NO_ROUTE")
            return
        ttl = self.forward_ttl(pkt, t)
        if ttl is None:
            return
        fwd = pkt.copy(ttl=ttl, body=Rrep(b.src, b.dst, b.dst_seq, hops,
                                          b.first_hop if b.first_hop is not None else self.node,
                                          b.lifetime_us))
        self.sim.trace_rtr("f", t, self.node, fwd)
        self.sim.phy.unicast(self.node, rev.next_hop, fwd, t)

    # -- failure handling -------------------------------------------------------------

    def _prune_via(self, next_hop: int, t: int) -> list[tuple[int, int]]:
        """Drop every path through a dead neighbor; report dsts left with none."""
        emptied = []
        for dst, entry in self.table.items():
            before = len(entry.paths)
            entry.paths = [p for p in entry.paths if p.next_hop != next_hop]
            if len(entry.paths) != before:
                self._note_paths(entry, dst)
                if not entry.paths:
                    entry.dst_seq += 1
                    entry.advertised = None
                    emptied.append((dst, entry.dst_seq))
        return emptied

    def _send_rerr(self, entries, t: int, originate: bool):
        pkt = Packet(self.sim.uids.next(), "RERR", self.p.rerr_size,
                     app_src=self.node, app_dst=-1, ttl=1, body=Rerr(tuple(entries)))
        self.sim.trace_rtr("s" if originate else "f", t, self.node, pkt)
        self.sim.phy.broadcast(self.node, pkt, t)

    def on_link_failure(self, next_hop: int, pkt: Packet, t: int):
        emptied = self._prune_via(next_hop, t)
        if emptied:
            self._send_rerr(emptied, t, originate=True)
        if pkt.kind == "DATA":
            path = self.select_path(pkt.app_dst, t)
            if path is not None:
                self._send_data(pkt, path, t)      # failover, no re-discovery
            elif self.node == pkt.app_src:
                self.buffer.push(pkt.app_dst, pkt, t)
                self.ensure_discovery(pkt.app_dst, t)
            else:
                self.drop(pkt, t, "NO_ROUTE")
        for dst, _ in emptied:
            if self.recently_active(dst, t):
                self.ensure_discovery(dst, t)

    def _handle_rerr(self, pkt: Packet, from_node: int, t: int):
        b: Rerr = pkt.body
        propagate = []
        for dst, seq in b.entries:
            entry = self.table.get(dst)
            if entry is None:
                continue
            before = len(entry.paths)
            entry.paths = [p for p in entry.paths if p.next_hop != from_node]
            if len(entry.paths) != before:
                self._note_paths(entry, dst)
                if not entry.paths:
                    entry.dst_seq = max(entry.dst_seq + 1, seq)
                    entry.advertised = None
                    propagate.append((dst, entry.dst_seq))
        if propagate:
            self._send_rerr(propagate, t, originate=False)
            for dst, _ in propagate:
                if self.recently_active(dst, t):
                    self.ensure_discovery(dst, t)

    # -- dispatch -----------------------------------------------------------------------

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
            path = self.select_path(pkt.app_dst, t)
            if path is None:
                self.drop(pkt, t, "NO_ROUTE")
                entry = self.table.get(pkt.app_dst)
                if entry is not None and entry.advertised is not None:
                    # paths just ran out: bump once and tell the neighborhood
                    entry.dst_seq += 1
                    entry.advertised = None
                    self.sim.note_route_change(self, pkt.app_dst)
                    self._send_rerr([(pkt.app_dst, entry.dst_seq)], t, originate=True)
                elif entry is None:
                    self._send_rerr([(pkt.app_dst, 1)], t, originate=True)
                return
            self._send_data(pkt.copy(ttl=ttl), path, t)
