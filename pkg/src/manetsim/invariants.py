"""Optional runtime validators for routing-state invariants.

Attached to a simulation for test runs; every violation is recorded as
a string rather than raised, so a run completes and the full damage
report is visible.
"""

from __future__ import annotations

from .core import fmt_time


class InvariantChecks:
    """Loop-freedom plus the multipath bookkeeping rules."""

    def __init__(self):
        self.violations: list[str] = []
        self._advertised: dict[tuple[int, int, int], int] = {}

    # A cycle created by a table mutation must pass through the mutated
    # node, so walking forward from it is a complete check.
    def route_change(self, sim, node: int, dst: int):
        proto = sim.protocols[node]
        t = sim.engine.now
        if hasattr(proto, "table") and hasattr(proto, "usable_route"):
            self._walk_single(sim, node, dst, t)
        elif hasattr(proto, "select_path"):
            self._walk_multi(sim, node, dst, t)

    def _walk_single(self, sim, start: int, dst: int, t: int):
        seen = {start}
        cur = start
        while cur != dst:
            entry = sim.protocols[cur].usable_route(dst, t)
            if entry is None:
                return
            cur = entry.next_hop
            if cur in seen:
                self.violations.append(
                    f"{fmt_time(t)}: next-hop cycle for dst {dst} via node {start}")
                return
            seen.add(cur)

    def _walk_multi(self, sim, start: int, dst: int, t: int):
        # DFS over every stored live path; any way back to a visited
        # ancestor is a potential forwarding loop.
        stack = [(start, frozenset((start,)))]
        guard = 0
        while stack:
            cur, on_path = stack.pop()
            guard += 1
            if guard > 10000:
                self.violations.append(f"{fmt_time(t)}: walk explosion for dst {dst}")
                return
            if cur == dst:
                continue
            entry = sim.protocols[cur].table.get(dst)
            if entry is None:
                continue
            for path in entry.paths:
                if t >= path.expires_at:
                    continue
                nh = path.next_hop
                if nh in on_path:
                    self.violations.append(
                        f"{fmt_time(t)}: multipath cycle for dst {dst} at node {cur} -> {nh}")
                    return
                stack.append((nh, on_path | {nh}))

    def aomdv_paths(self, sim, node: int, dst: int, entry):
        nhs = [p.next_hop for p in entry.paths]
        lhs = [p.last_hop for p in entry.paths]
        if len(set(nhs)) != len(nhs) or len(set(lhs)) != len(lhs):
            self.violations.append(
                f"{fmt_time(sim.engine.now)}: non-disjoint path set at node {node} for dst {dst}")
        if entry.advertised is not None:
            for p in entry.paths:
                first = entry.paths[0]
                limit_ok = p.hop_count < entry.advertised or p is first
                if not limit_ok:
                    self.violations.append(
                        f"{fmt_time(sim.engine.now)}: path beyond advertised bound at "
                        f"node {node} for dst {dst}")

    def aomdv_advertised(self, sim, node: int, dst: int):
        entry = sim.protocols[node].table.get(dst)
        if entry is None or entry.advertised is None:
            return
        key = (node, dst, entry.dst_seq)
        prev = self._advertised.get(key)
        if prev is None:
            self._advertised[key] = entry.advertised
        elif prev != entry.advertised:
            self.violations.append(
                f"{fmt_time(sim.engine.now)}: advertised hop count changed at node {node} "
                f"for dst {dst} seq {entry.dst_seq}: {prev} -> {entry.advertised}")
