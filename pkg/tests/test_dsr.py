from manetsim.core import Event, EventKind, to_us
from manetsim.dsr import DataHeader, Dsr, DsrParams, RouteCache
from manetsim.metrics import recount_trace

from conftest import CHAIN3, TREE8, flow, make_sim, read_trace


def control(records, kind, ops=("s", "f")):
    return [r for r in records if r.layer == "RTR" and r.pkt_kind == kind and r.op in ops]


# -- route cache ---------------------------------------------------------------

def test_cache_prefers_fewest_hops_then_oldest():
    cache = RouteCache(4)
    cache.add((0, 1, 2, 9), 100)
    cache.add((0, 3, 9), 200)
    cache.add((0, 4, 9), 300)
    assert cache.select(9) == (0, 3, 9)     # shortest, oldest among length ties


def test_cache_caps_per_destination_evicting_oldest():
    cache = RouteCache(2)
    cache.add((0, 1, 9), 1)
    cache.add((0, 2, 9), 2)
    cache.add((0, 3, 9), 3)
    routes = {r for r in cache.all_routes()}
    assert routes == {(0, 2, 9), (0, 3, 9)}


def test_cache_prune_removes_routes_containing_link():
    cache = RouteCache(4)
    cache.add((0, 1, 2, 9), 1)
    cache.add((0, 3, 9), 2)
    cache.add((0, 2, 1, 9), 3)     # reversed pair: must survive
    cache.prune((1, 2))
    assert set(cache.all_routes()) == {(0, 3, 9), (0, 2, 1, 9)}


def test_cache_ignores_duplicate_route():
    cache = RouteCache(4)
    cache.add((0, 1, 9), 1)
    cache.add((0, 1, 9), 50)
    assert len(list(cache.all_routes())) == 1


# -- discovery ----------------------------------------------------------------

def test_cache_hit_sends_without_flood(tmp_path):
    sim = make_sim(tmp_path, protocol="dsr", positions=CHAIN3, sim_time=30.0,
                   flows=[flow(0, 2, rate=4.0, start=1.0, stop=25.0)])
    sim.run()
    records = read_trace(sim)
    assert len(control(records, "RREQ", ops=("s",))) == 1
    agt_r = [r for r in records if r.layer == "AGT" and r.op == "r"]
    assert len(agt_r) == 96


def test_static_second_send_zero_marginal_overhead(tmp_path):
    sim = make_sim(tmp_path, protocol="dsr", positions=CHAIN3, sim_time=30.0,
                   flows=[flow(0, 2, rate=1.0, start=1.0, stop=25.0)])
    sim.run()
    records = read_trace(sim)
    first_data_time = min(r.time_us for r in records
                          if r.layer == "AGT" and r.op == "r")
    late_control = [r for r in control(records, "RREQ") + control(records, "RREP")
                    + control(records, "RERR") if r.time_us > first_data_time]
    assert late_control == []


def test_data_header_grows_with_route_length(tmp_path):
    # two-hop route = three addresses: 512 payload + 8 base + 4 per address
    sim = make_sim(tmp_path, protocol="dsr", positions=CHAIN3, sim_time=10.0,
                   flows=[flow(0, 2, rate=1.0, start=1.0, stop=3.0)])
    sim.run()
    records = read_trace(sim)
    sizes = {r.size for r in records
             if r.pkt_kind == "DATA" and r.layer == "MAC" and r.op == "s"}
    assert sizes == {512 + 8 + 4 * 3}


def test_route_record_accumulates_and_reply_carries_it(tmp_path):
    # eight-node tree: the only path from 0 to 7 is the 0-2-4-7 backbone,
    # so the record grows hop by hop and returns intact in the reply
    sim = make_sim(tmp_path, protocol="dsr", positions=TREE8, sim_time=30.0,
                   flows=[flow(0, 7, rate=2.0, start=1.0, stop=25.0)])
    rreq_records = []
    def tap(pkt, frm, to, t):
        if pkt.kind == "RREQ":
            rreq_records.append(tuple(pkt.body.record))
    sim.packet_tap = tap
    sim.run()
    assert (0,) in rreq_records
    assert (0, 2) in rreq_records
    assert (0, 2, 4) in rreq_records
    # no in-flight record ever contains a repeated node
    assert all(len(set(rec)) == len(rec) for rec in rreq_records)
    assert sim.protocols[0].cache.select(7) == (0, 2, 4, 7)


def test_intermediate_caches_suffix_from_forwarded_reply(tmp_path):
    sim = make_sim(tmp_path, protocol="dsr", positions=TREE8, sim_time=10.0,
                   flows=[flow(0, 7, rate=1.0, start=1.0, stop=3.0)])
    sim.run()
    assert sim.protocols[4].cache.select(7) == (4, 7)
    assert sim.protocols[2].cache.select(7) == (2, 4, 7)


def test_own_id_in_record_discards(tmp_path):
    sim = make_sim(tmp_path, protocol="dsr", positions=CHAIN3, sim_time=5.0)
    proto: Dsr = sim.protocols[1]
    from manetsim.dsr import Rreq
    from manetsim.packets import Packet
    pkt = Packet(50, "RREQ", 44, 0, 2,
                 body=Rreq(0, 2, 1, (0, 1)))       # node 1 already recorded
    forwarded = []
    sim.packet_tap = (lambda p, frm, to, t:
                      forwarded.append(p.uid) if frm == 1 else None)
    sim.engine.schedule(Event(10, EventKind.PACKET_DELIVERY, 1,
                              lambda: sim.deliver(pkt, 0, 1, 10)))
    sim.run()
    assert forwarded == []


def test_forward_data_follows_header_and_off_route_drops(tmp_path):
    sim = make_sim(tmp_path, protocol="dsr", positions=CHAIN3, sim_time=5.0)
    from manetsim.packets import Packet
    good = Packet(60, "DATA", 524, 0, 2, body=DataHeader((0, 1, 2), 1, 512))
    stray = Packet(61, "DATA", 524, 0, 2, body=DataHeader((0, 0, 2), 1, 512))
    sim.trace_agt("s", 0, 0, good)
    sim.trace_agt("s", 0, 0, stray)
    hops = []
    sim.packet_tap = lambda p, frm, to, t: hops.append((p.uid, frm, to))
    sim.engine.schedule(Event(10, EventKind.PACKET_DELIVERY, 1,
                              lambda: sim.deliver(good, 0, 1, 10)))
    sim.engine.schedule(Event(20, EventKind.PACKET_DELIVERY, 1,
                              lambda: sim.deliver(stray, 0, 1, 20)))
    sim.run()
    assert (60, 1, 2) in hops
    drops = [r for r in read_trace(sim) if r.op == "d" and r.uid == 61]
    assert drops and drops[0].reason == "ROUTE_ERROR"


# -- maintenance ------------------------------------------------------------------

def test_break_yields_rerr_at_source_and_cache_prune(tmp_path):
    # break the backbone tail: the forwarder reports (4,7) back to 0, and
    # every node on the way prunes routes over the dead link
    sim = make_sim(tmp_path, protocol="dsr", positions=TREE8, sim_time=40.0,
                   flows=[flow(0, 7, rate=4.0, start=1.0, stop=35.0)])
    sim.engine.schedule(Event(to_us(10.0), EventKind.TIMER, 7,
                              lambda: sim.teleport(7, 9000.0, 9000.0, to_us(10.0))))
    sim.run()
    records = read_trace(sim)
    rerr_tx = control(records, "RERR")
    assert any(r.node == 4 for r in rerr_tx), "node adjacent to the break reports it"
    rerr_rcv_at_src = [r for r in records
                       if r.layer == "MAC" and r.op == "r" and r.pkt_kind == "RERR"
                       and r.node == 0]
    assert rerr_rcv_at_src, "the error reaches the originator"
    bad = [rt for rt in sim.protocols[0].cache.all_routes()
           if any(rt[i] == 4 and rt[i + 1] == 7 for i in range(len(rt) - 1))]
    assert bad == []
    floods = control(records, "RREQ", ops=("s",))
    assert len(floods) >= 2, "no alternate in cache, so a fresh discovery starts"


def test_cached_alternate_used_without_new_flood(tmp_path):
    # seed a second disjoint route; after the first route dies, traffic must
    # switch to the alternate with zero additional discovery floods
    sim = make_sim(tmp_path, protocol="dsr", positions=TREE8, sim_time=40.0,
                   flows=[flow(0, 7, rate=4.0, start=1.0, stop=35.0)])
    proto: Dsr = sim.protocols[0]

    def seed_alternate():
        proto.cache.add((0, 2, 4, 5, 6, 7), sim.engine.now)

    sim.engine.schedule(Event(to_us(6.0), EventKind.TIMER, 0, seed_alternate))
    # leaves 5 and 6 bridge the backbone: break only the direct 4-7 link by
    # moving 7 upward, still in range of 6
    sim.engine.schedule(Event(to_us(10.0), EventKind.TIMER, 7,
                              lambda: sim.teleport(7, 600.0, 440.0, to_us(10.0))))
    sim.run()
    records = read_trace(sim)
    floods = control(records, "RREQ", ops=("s",))
    assert len(floods) == 1, "alternate cached route avoids re-discovery"
    data_via_6 = [r for r in records if r.layer == "MAC" and r.op == "s"
                  and r.pkt_kind == "DATA" and r.node == 6]
    assert data_via_6, "traffic rerouted over the alternate"


def test_salvage_limit_drops_after_budget(tmp_path):
    params = DsrParams(salvage_limit=0)
    sim = make_sim(tmp_path, protocol="dsr", positions=TREE8, sim_time=20.0,
                   flows=[flow(0, 7, rate=4.0, start=1.0, stop=15.0)],
                   protocol_params={"dsr": {"salvage_limit": 0}})
    sim.engine.schedule(Event(to_us(5.0), EventKind.TIMER, 7,
                              lambda: sim.teleport(7, 9000.0, 9000.0, to_us(5.0))))
    sim.run()
    drops = [r for r in read_trace(sim) if r.op == "d" and r.reason == "ROUTE_ERROR"]
    assert drops, "without salvage budget the packet in flight dies at the break"
