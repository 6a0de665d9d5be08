from manetsim.aomdv import Aomdv, AomdvParams, MultipathEntry, PathRec
from manetsim.core import Event, EventKind, to_us
from manetsim.invariants import InvariantChecks

from conftest import DIAMOND, flow, make_sim, read_trace


def control(records, kind, ops=("s", "f")):
    return [r for r in records if r.layer == "RTR" and r.pkt_kind == kind and r.op in ops]


class _StubSim:
    class _E:
        now = 0
    engine = _E()

    def __init__(self):
        class Cfg:
            buffer_capacity = 64
            buffer_timeout = 30.0
            ttl = 32
        self.cfg = Cfg()

    def note_route_change(self, proto, dst):
        pass

    def note_aomdv_paths(self, proto, dst, entry):
        pass


def fresh(params=None):
    return Aomdv(_StubSim(), 0, params)


LIFE = to_us(10.0)


def test_accept_shorter_disjoint_alternate():
    proto = fresh()
    assert proto.accept_path(9, next_hop=1, last_hop=5, hop_count=2, seq=3,
                             lifetime_us=LIFE, t=0)
    entry = proto.table[9]
    assert entry.advertised == 3
    assert proto.accept_path(9, next_hop=2, last_hop=6, hop_count=2, seq=3,
                             lifetime_us=LIFE, t=0)
    assert len(entry.paths) == 2


def test_reject_alternate_at_advertised_boundary():
    proto = fresh()
    proto.accept_path(9, 1, 5, hop_count=2, seq=3, lifetime_us=LIFE, t=0)
    assert not proto.accept_path(9, 2, 6, hop_count=3, seq=3, lifetime_us=LIFE, t=0)


def test_greater_seq_resets_path_set():
    proto = fresh()
    proto.accept_path(9, 1, 5, hop_count=2, seq=3, lifetime_us=LIFE, t=0)
    proto.accept_path(9, 2, 6, hop_count=2, seq=3, lifetime_us=LIFE, t=0)
    assert proto.accept_path(9, 4, 8, hop_count=5, seq=4, lifetime_us=LIFE, t=0)
    entry = proto.table[9]
    assert [p.next_hop for p in entry.paths] == [4]
    assert entry.advertised == 6
    assert entry.dst_seq == 4


def test_lower_seq_rejected():
    proto = fresh()
    proto.accept_path(9, 1, 5, hop_count=2, seq=3, lifetime_us=LIFE, t=0)
    assert not proto.accept_path(9, 2, 6, hop_count=1, seq=2, lifetime_us=LIFE, t=0)


def test_duplicate_next_hop_or_last_hop_rejected():
    proto = fresh()
    proto.accept_path(9, 1, 5, hop_count=3, seq=3, lifetime_us=LIFE, t=0)
    assert not proto.accept_path(9, 1, 6, hop_count=2, seq=3, lifetime_us=LIFE, t=0)
    assert not proto.accept_path(9, 2, 5, hop_count=2, seq=3, lifetime_us=LIFE, t=0)
    assert proto.accept_path(9, 2, 6, hop_count=2, seq=3, lifetime_us=LIFE, t=0)


def test_max_paths_bounds_the_set():
    proto = fresh()
    proto.accept_path(9, 1, 1, hop_count=5, seq=3, lifetime_us=LIFE, t=0)
    for nh in (2, 3, 4, 5):
        proto.accept_path(9, nh, nh, hop_count=2, seq=3, lifetime_us=LIFE, t=0)
    assert len(proto.table[9].paths) == 3


def test_strict_advertised_mode_rejects_equal_length():
    proto = fresh(AomdvParams(advertise_plus_one=False))
    proto.accept_path(9, 1, 5, hop_count=2, seq=3, lifetime_us=LIFE, t=0)
    assert proto.table[9].advertised == 2
    assert not proto.accept_path(9, 2, 6, hop_count=2, seq=3, lifetime_us=LIFE, t=0)


def test_select_path_first_live_and_expiry_failover():
    proto = fresh()
    proto.accept_path(9, 1, 5, hop_count=2, seq=3, lifetime_us=to_us(1.0), t=0)
    proto.accept_path(9, 2, 6, hop_count=2, seq=3, lifetime_us=to_us(5.0), t=0)
    assert proto.select_path(9, 0).next_hop == 1
    assert proto.select_path(9, to_us(2.0)).next_hop == 2     # first expired
    assert proto.select_path(9, to_us(6.0)) is None


# -- integration on the diamond ------------------------------------------------

def run_diamond(tmp_path, break_at=None, checks=None, stop=25.0, sim_time=30.0):
    sim = make_sim(tmp_path, protocol="aomdv", positions=DIAMOND,
                   sim_time=sim_time, checks=checks,
                   flows=[flow(0, 3, rate=4.0, start=1.0, stop=stop)])
    if break_at is not None:
        # pull the first relay away from everyone: the 0-1 and 1-3 links die
        sim.engine.schedule(Event(to_us(break_at), EventKind.TIMER, 1,
                                  lambda: sim.teleport(1, 9000.0, 9000.0,
                                                       to_us(break_at))))
    sim.run()
    return sim, read_trace(sim)


def test_destination_replies_once_per_distinct_first_hop(tmp_path):
    sim, records = run_diamond(tmp_path)
    rreps = control(records, "RREP", ops=("s",))
    assert len(rreps) == 2
    assert all(r.node == 3 for r in rreps)


def test_source_holds_two_disjoint_paths(tmp_path):
    # probe right after discovery: the unused alternate expires later
    sim = make_sim(tmp_path, protocol="aomdv", positions=DIAMOND, sim_time=5.0,
                   flows=[flow(0, 3, rate=4.0, start=1.0, stop=4.0)])
    snapshot = []
    sim.engine.schedule(Event(to_us(2.0), EventKind.TIMER, 0,
                              lambda: snapshot.extend(
                                  (p.next_hop, p.last_hop)
                                  for p in sim.protocols[0].table[3].paths)))
    sim.run()
    assert sorted(nh for nh, _ in snapshot) == [1, 2]
    assert sorted(lh for _, lh in snapshot) == [1, 2]


def test_midway_nodes_forward_flood_once(tmp_path):
    sim, records = run_diamond(tmp_path)
    fwd_per_node = {}
    for r in control(records, "RREQ"):
        fwd_per_node[r.node] = fwd_per_node.get(r.node, 0) + 1
    assert fwd_per_node[1] == 1
    assert fwd_per_node[2] == 1


def test_failover_uses_alternate_without_new_flood(tmp_path):
    sim, records = run_diamond(tmp_path, break_at=10.0)
    floods = control(records, "RREQ", ops=("s",))
    assert len(floods) == 1, "alternate path must absorb the failure"
    agt_s = [r for r in records if r.layer == "AGT" and r.op == "s"]
    agt_r = [r for r in records if r.layer == "AGT" and r.op == "r"]
    # only the packet in flight during detection can die
    assert len(agt_s) - len(agt_r) <= 1
    late_data = [r for r in records if r.layer == "MAC" and r.op == "s"
                 and r.pkt_kind == "DATA" and r.node == 2
                 and r.time_us > to_us(10.0)]
    assert late_data, "traffic switched to the second relay"


def test_last_path_failure_degenerates_to_rediscovery(tmp_path):
    sim = make_sim(tmp_path, protocol="aomdv", positions=[(0.0, 0.0), (200.0, 0.0), (400.0, 0.0)],
                   sim_time=30.0, flows=[flow(0, 2, rate=4.0, start=1.0, stop=25.0)])
    # 2 leaves 1's range but lands next to 0: the old route dies, a fresh
    # discovery finds the new one-hop route
    sim.engine.schedule(Event(to_us(10.0), EventKind.TIMER, 2,
                              lambda: sim.teleport(2, 0.0, 200.0, to_us(10.0))))
    sim.run()
    records = read_trace(sim)
    rerrs = control(records, "RERR")
    assert rerrs, "single-path entry exhausts, so an error must go out"
    floods = control(records, "RREQ", ops=("s",))
    assert len(floods) >= 2, "re-discovery after losing the only path"
    # new geometry still connects 0-1-2, so traffic recovers
    agt_r = [r for r in records if r.layer == "AGT" and r.op == "r"]
    assert agt_r[-1].time_us > to_us(11.0)


def test_rerr_prunes_only_paths_via_sender():
    proto = fresh()
    proto.accept_path(9, 1, 5, hop_count=2, seq=3, lifetime_us=LIFE, t=0)
    proto.accept_path(9, 2, 6, hop_count=2, seq=3, lifetime_us=LIFE, t=0)
    from manetsim.aomdv import Rerr
    from manetsim.packets import Packet
    pkt = Packet(1, "RERR", 32, 1, -1, body=Rerr(((9, 7),)))
    proto.on_packet(pkt, 1, 0)
    assert [p.next_hop for p in proto.table[9].paths] == [2]


def test_aomdv_invariants_hold_on_mobile_run(tmp_path):
    checks = InvariantChecks()
    sim = make_sim(tmp_path, protocol="aomdv", nodes=20, max_speed=25.0,
                   sim_time=30.0, seed=6, checks=checks,
                   flows=[flow(0, 7, stop=25.0), flow(3, 12, stop=25.0),
                          flow(15, 2, stop=25.0)])
    sim.run()
    assert checks.violations == []
