"""Dynamic Source Routing.

Data packets carry their complete hop list; forwarders follow it
verbatim.  Discovery floods accumulate a route record, the destination
returns the record in the reply, and every node keeps a cache of full
source routes.  Link failures raise a route error toward the packet's
source; caches prune every route using the broken link (there is no
timeout, so staleness persists until an error proves a route dead).
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import to_us
from .packets import Packet
from .routing import RoutingProtocol


@dataclass
class DsrParams:
    routes_per_dst: int = 4
    dup_window: float = 10.0      # seconds a (src, request_id) suppresses re-forwarding
    rreq_base: int = 32           # bytes; + addr_bytes per recorded hop
    rrep_base: int = 36           # bytes; + addr_bytes per route hop
    rerr_size: int = 36
    data_header_base: int = 8     # bytes; + addr_bytes per route hop
    addr_bytes: int = 4
    salvage_limit: int = 1
    rreq_retries: int = 2
    retry_wait: float = 1.0
    # Unbounded trust in old routes melts down at high mobility, so cached
    # entries also age out; errors remain the primary removal path.
    cache_ttl: float = 30.0       # seconds; 0 disables aging


class Rreq:
    __slots__ = ("src", "dst", "request_id", "record")

    def __init__(self, src, dst, request_id, record):
        self.src = src
        self.dst = dst
        self.request_id = request_id
        self.record = record          # tuple of node ids, starts with src


class SourceRouted:
    """Header shared by RREP/RERR/DATA travel: follow `sr` hop by hop."""

    __slots__ = ("sr", "pos")

    def __init__(self, sr, pos):
        self.sr = sr                  # tuple of node ids, first is originator
        self.pos = pos                # index of the current holder in sr


class Rrep(SourceRouted):
    __slots__ = ("route",)

    def __init__(self, route, sr, pos):
        super().__init__(sr, pos)
        self.route = route            # discovered route, source..destination


class Rerr(SourceRouted):
    __slots__ = ("reporter", "broken")

    def __init__(self, reporter, broken, sr, pos):
        super().__init__(sr, pos)
        self.reporter = reporter
        self.broken = broken          # (from_node, to_node)


class DataHeader(SourceRouted):
    __slots__ = ("payload", "salvaged")

    def __init__(self, route, pos, payload, salvaged=0):
        super().__init__(route, pos)
        self.payload = payload        # application bytes, before header
        self.salvaged = salvaged


class RouteCache:
    """Per-destination list of source routes, oldest first, bounded.

    Entries die on a reported broken link or once they age past the ttl
    (checked lazily on access)."""

    def __init__(self, capacity_per_dst: int, ttl_us: int = 0):
        self.capacity = capacity_per_dst
        self.ttl_us = ttl_us
        self.routes: dict[int, list[tuple[tuple[int, ...], int]]] = {}

    def _expire(self, dst: int, t: int):
        if self.ttl_us <= 0:
            return
        lst = self.routes.get(dst)
        if not lst:
            return
        kept = [item for item in lst if t - item[1] <= self.ttl_us]
        if kept:
            self.routes[dst] = kept
        else:
            del self.routes[dst]

    def add(self, route: tuple[int, ...], t: int):
        dst = route[-1]
        self._expire(dst, t)
        lst = self.routes.setdefault(dst, [])
        if any(r == route for r, _ in lst):
            return
        if len(lst) >= self.capacity:
            lst.pop(0)
        lst.append((route, t))

    def select(self, dst: int, t: int = 0) -> tuple[int, ...] | None:
        """Fewest hops wins; ties go to the oldest entry."""
        self._expire(dst, t)
        lst = self.routes.get(dst)
        if not lst:
            return None
        return min(lst, key=lambda item: len(item[0]))[0]

    def prune(self, link: tuple[int, int]):
        a, b = link
        for dst, lst in list(self.routes.items()):
            kept = [item for item in lst
                    if not any(item[0][i] == a and item[0][i + 1] == b
                               for i in range(len(item[0]) - 1))]
            if kept:
                self.routes[dst] = kept
            else:
                del self.routes[dst]

    def all_routes(self):
        for lst in self.routes.values():
            for route, _ in lst:
                yield route


class Dsr(RoutingProtocol):
    name = "dsr"

    def __init__(self, sim, node, params: DsrParams | None = None):
        super().__init__(sim, node)
        self.p = params or DsrParams()
        self.rreq_retries = self.p.rreq_retries
        self.retry_wait_s = self.p.retry_wait
        self.request_id = 0
        self.cache = RouteCache(self.p.routes_per_dst, to_us(self.p.cache_ttl))
        self.seen: dict[tuple[int, int], int] = {}
        self._dup_us = to_us(self.p.dup_window)

    # -- sizes ---------------------------------------------------------------

    def _rreq_size(self, record) -> int:
        return self.p.rreq_base + self.p.addr_bytes * len(record)

    def _rrep_size(self, route) -> int:
        return self.p.rrep_base + self.p.addr_bytes * len(route)

    def _data_size(self, payload: int, route) -> int:
        return payload + self.p.data_header_base + self.p.addr_bytes * len(route)

    # -- application data -------------------------------------------------------

    def on_app_send(self, dst: int, pkt: Packet, t: int):
        self.last_app_send[dst] = t
        route = self.cache.select(dst, t)
        if route is not None:
            self._send_on_route(pkt, route, t)
        else:
            self.buffer.push(dst, pkt, t)
            self.ensure_discovery(dst, t)

    def _send_on_route(self, pkt: Packet, route: tuple[int, ...], t: int, salvaged=0):
        payload = pkt.body.payload if isinstance(pkt.body, DataHeader) else pkt.size
        stamped = pkt.copy(size=self._data_size(payload, route),
                           body=DataHeader(route, 1, payload, salvaged))
        if self.node != pkt.app_src or salvaged:
            self.sim.trace_rtr("f", t, self.node, stamped)
        self.sim.phy.unicast(self.node, route[1], stamped, t)

    # -- discovery ----------------------------------------------------------------

    def _send_rreq(self, dst: int, t: int):
        self.request_id += 1
        record = (self.node,)
        body = Rreq(self.node, dst, self.request_id, record)
        pkt = Packet(self.sim.uids.next(), "RREQ", self._rreq_size(record),
                     app_src=self.node, app_dst=dst, ttl=self.sim.cfg.ttl, body=body)
        self.seen[(self.node, self.request_id)] = t + self._dup_us
        self.sim.trace_rtr("s", t, self.node, pkt)
        self.sim.phy.broadcast(self.node, pkt, t)

    def _handle_rreq(self, pkt: Packet, from_node: int, t: int):
        b: Rreq = pkt.body
        key = (b.src, b.request_id)
        exp = self.seen.get(key)
        if exp is not None and t < exp:
            return
        self.seen[key] = t + self._dup_us
        if self.node in b.record:
            return
        if self.node == b.dst:
            full = b.record + (self.node,)
            self._send_rrep(full, t)
            self._forward_rreq(pkt, b, t)     # flood keeps its one-tx-per-node shape
            return
        cached = self.cache.select(b.dst, t)
        if cached is not None:
            # answer from cache when stitching the record to the cached tail
            # stays loop-free; otherwise keep flooding
            full = b.record + cached          # cached starts with this node
            if len(set(full)) == len(full):
                self._send_rrep(full, t)
                return
        self._forward_rreq(pkt, b, t)

    def _forward_rreq(self, pkt: Packet, b: Rreq, t: int):
        ttl = self.forward_ttl(pkt, t)
        if ttl is None:
            return
        record = b.record + (self.node,)
        fwd = pkt.copy(ttl=ttl, size=self._rreq_size(record),
                       body=Rreq(b.src, b.dst, b.request_id, record))
        self.sim.trace_rtr("f", t, self.node, fwd)
        self.sim.jittered_broadcast(self.node, fwd, t)

    def _send_rrep(self, route: tuple[int, ...], t: int):
        sr = tuple(reversed(route[:route.index(self.node) + 1]))
        body = Rrep(route, sr, 1)
        pkt = Packet(self.sim.uids.next(), "RREP", self._rrep_size(route),
                     app_src=self.node, app_dst=route[0], ttl=self.sim.cfg.ttl, body=body)
        self.sim.trace_rtr("s", t, self.node, pkt)
        if len(sr) == 1:
            return  # degenerate: replying to self never happens in practice
        self.sim.phy.unicast(self.node, sr[1], pkt, t)

    def _handle_rrep(self, pkt: Packet, t: int):
        b: Rrep = pkt.body
        if b.sr[b.pos] != self.node:
            self.drop(pkt, t, "ROUTE_ERROR")
            return
        if b.pos == len(b.sr) - 1:
            # originator: install and release anything waiting
            self.cache.add(b.route, t)
            dst = b.route[-1]
            route = self.cache.select(dst, t)
            if route is None:
                return
            for data in self.discovery_succeeded(dst, t):
                self._send_on_route(data, route, t)
            return
        # transit: remember the tail of the advertised route, pass it along
        if self.node in b.route:
            idx = b.route.index(self.node)
            if idx < len(b.route) - 1:
                self.cache.add(b.route[idx:], t)
        ttl = self.forward_ttl(pkt, t)
        if ttl is None:
            return
        fwd = pkt.copy(ttl=ttl, body=Rrep(b.route, b.sr, b.pos + 1))
        self.sim.trace_rtr("f", t, self.node, fwd)
        self.sim.phy.unicast(self.node, b.sr[b.pos + 1], fwd, t)

    # -- data forwarding -------------------------------------------------------------

    def _handle_data(self, pkt: Packet, t: int):
        b: DataHeader = pkt.body
        if b.pos >= len(b.sr) or b.sr[b.pos] != self.node:
            self.drop(pkt, t, "ROUTE_ERROR")
            return
        ttl = self.forward_ttl(pkt, t)
        if ttl is None:
            return
        fwd = pkt.copy(ttl=ttl, body=DataHeader(b.sr, b.pos + 1, b.payload, b.salvaged))
        self.sim.trace_rtr("f", t, self.node, fwd)
        self.sim.phy.unicast(self.node, b.sr[b.pos + 1], fwd, t)

    # -- failure handling ---------------------------------------------------------------

    def _send_rerr(self, broken: tuple[int, int], orig_src: int, traversed: tuple[int, ...], t: int):
        sr = tuple(reversed(traversed))
        if len(sr) < 2:
            return
        body = Rerr(self.node, broken, sr, 1)
        pkt = Packet(self.sim.uids.next(), "RERR", self.p.rerr_size,
                     app_src=self.node, app_dst=orig_src, ttl=self.sim.cfg.ttl, body=body)
        self.sim.trace_rtr("s", t, self.node, pkt)
        self.sim.phy.unicast(self.node, sr[1], pkt, t)

    def on_link_failure(self, next_hop: int, pkt: Packet, t: int):
        self.cache.prune((self.node, next_hop))
        body = pkt.body
        if pkt.kind == "DATA" and isinstance(body, DataHeader):
            traversed = body.sr[:body.pos]       # holder is sr[pos-1]
            if len(traversed) > 1:
                self._send_rerr((self.node, next_hop), body.sr[0], traversed, t)
            self._salvage_or_drop(pkt, body, t)
        elif pkt.kind == "RREP" and isinstance(body, Rrep):
            traversed = body.sr[:body.pos]
            if len(traversed) > 1:
                self._send_rerr((self.node, next_hop), body.sr[0], traversed, t)
            # the reply itself dies; the originator's retry re-floods
        # a failed RERR is dropped silently: no error cascades about errors

    def _salvage_or_drop(self, pkt: Packet, b: DataHeader, t: int):
        if self.node == pkt.app_src:
            route = self.cache.select(pkt.app_dst, t)
            if route is not None:
                self._send_on_route(pkt, route, t, salvaged=b.salvaged)
            else:
                self.buffer.push(pkt.app_dst, pkt, t)
                self.ensure_discovery(pkt.app_dst, t)
            return
        if b.salvaged < self.p.salvage_limit:
            alt = self.cache.select(pkt.app_dst, t)
            if alt is not None:
                self._send_on_route(pkt, alt, t, salvaged=b.salvaged + 1)
                return
        self.drop(pkt, t, "ROUTE_ERROR")

    def _handle_rerr(self, pkt: Packet, t: int):
        b: Rerr = pkt.body
        self.cache.prune(b.broken)
        if b.sr[b.pos] != self.node:
            return
        if b.pos == len(b.sr) - 1:
            return                 # reached the source; its cache is now clean
        ttl = self.forward_ttl(pkt, t)
        if ttl is None:
            return
        fwd = pkt.copy(ttl=ttl, body=Rerr(b.reporter, b.broken, b.sr, b.pos + 1))
        self.sim.trace_rtr("f", t, self.node, fwd)
        self.sim.phy.unicast(self.node, b.sr[b.pos + 1], fwd, t)

    # -- dispatch ---------------------------------------------------------------------

    def on_packet(self, pkt: Packet, from_node: int, t: int):
        kind = pkt.kind
        if kind == "RREQ":
            self._handle_rreq(pkt, from_node, t)
        elif kind == "RREP":
            self._handle_rrep(pkt, t)
        elif kind == "RERR":
            self._handle_rerr(pkt, t)
        elif kind == "DATA":
            self._handle_data(pkt, t)
