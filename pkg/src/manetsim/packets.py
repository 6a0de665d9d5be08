"""Shared packet vocabulary for all routing protocols."""

from __future__ import annotations

from itertools import count

BROADCAST = -1
DEFAULT_TTL = 32


class Packet:
    """One simulated packet. Forwarding nodes never mutate a received
    packet; they build a copy (broadcast frames are shared objects)."""

    __slots__ = ("uid", "kind", "size", "app_src", "app_dst", "ttl", "body")

    def __init__(self, uid: int, kind: str, size: int, app_src: int, app_dst: int,
                 ttl: int = DEFAULT_TTL, body=None):
        self.uid = uid
        self.kind = kind            # DATA | RREQ | RREP | RERR
        self.size = size
        self.app_src = app_src
        self.app_dst = app_dst
        self.ttl = ttl
        self.body = body            # protocol-specific payload

    def copy(self, **overrides) -> "Packet":
        kw = dict(uid=self.uid, kind=self.kind, size=self.size,
                  app_src=self.app_src, app_dst=self.app_dst,
                  ttl=self.ttl, body=self.body)
        kw.update(overrides)
        return Packet(**kw)

    def __repr__(self):
        return f"Packet(uid={self.uid}, {self.kind}, {self.app_src}->{self.app_dst}, ttl={self.ttl})"


class UidSource:
    """Monotone run-wide packet id counter."""

    def __init__(self):
        self._counter = count()

    def next(self) -> int:
        return next(self._counter)
