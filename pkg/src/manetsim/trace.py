"""Packet-event trace: emission, parsing, and the line format.

One record per line, space separated:

    <op> <time.6f> <node:int> <layer> <pkt_kind> <uid:int> <size:int> <src:int> <dst:int> <reason|->

op is s (send), r (receive), d (drop), f (forward).  Drop records carry a
reason token; all others carry `-`.  A dst of -1 denotes broadcast.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from .core import US_PER_S, fmt_time

OPS = ("s", "r", "d", "f")
LAYERS = ("AGT", "RTR", "MAC")
PKT_KINDS = ("DATA", "RREQ", "RREP", "RERR")
REASONS = ("NO_ROUTE", "TTL", "DUP", "ROUTE_ERROR", "LOSS")


class ParseError(Exception):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class TraceRecord:
    op: str
    time_us: int
    node: int
    layer: str
    pkt_kind: str
    uid: int
    size: int
    src: int
    dst: int
    reason: Optional[str] = None

    def line(self) -> str:
        return (f"{self.op} {fmt_time(self.time_us)} {self.node} {self.layer} "
                f"{self.pkt_kind} {self.uid} {self.size} {self.src} {self.dst} "
                f"{self.reason or '-'}")


def parse_time(token: str) -> int:
    whole, _, frac = token.partition(".")
    if len(frac) != 6:
        raise ValueError(f"expected 6 fractional digits, got {token!r}")
    return int(whole) * US_PER_S + int(frac)


def parse_line(line: str, line_no: int = 0) -> TraceRecord:
    parts = line.split()
    if len(parts) != 10:
        raise ParseError(line_no, f"expected 10 fields, got {len(parts)}")
    op, t, node, layer, kind, uid, size, src, dst, reason = parts
    if op not in OPS:
        raise ParseError(line_no, f"bad op {op!r}")
    if layer not in LAYERS:
        raise ParseError(line_no, f"bad layer {layer!r}")
    if kind not in PKT_KINDS:
        raise ParseError(line_no, f"bad pkt_kind {kind!r}")
    if reason != "-" and reason not in REASONS:
        raise ParseError(line_no, f"bad reason {reason!r}")
    if op == "d" and reason == "-":
        raise ParseError(line_no, "drop record without reason")
    if op != "d" and reason != "-":
        raise ParseError(line_no, f"non-drop record with reason {reason!r}")
    try:
        return TraceRecord(op, parse_time(t), int(node), layer, kind,
                           int(uid), int(size), int(src), int(dst),
                           None if reason == "-" else reason)
    except ValueError as exc:
        raise ParseError(line_no, str(exc)) from exc


def parse_trace(lines: Iterable[str]) -> list[TraceRecord]:
    records = []
    for i, line in enumerate(lines, start=1):
        line = line.rstrip("\n")
        if not line:
            continue
        records.append(parse_line(line, i))
    return records


class TraceWriter:
    """Appends records to a text file; lines must be nondecreasing in time."""

    def __init__(self, path: str):
        self.path = path
        self._fh = open(path, "w", buffering=1 << 20)
        self._last_us = -1

    def emit(self, op: str, time_us: int, node: int, layer: str, pkt_kind: str,
             uid: int, size: int, src: int, dst: int, reason: str | None = None):
        if time_us < self._last_us:
            raise ValueError("trace emission went backwards in time")
        self._last_us = time_us
        self._fh.write(
            f"{op} {fmt_time(time_us)} {node} {layer} {pkt_kind} {uid} {size} "
            f"{src} {dst} {reason or '-'}\n")

    def close(self):
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
