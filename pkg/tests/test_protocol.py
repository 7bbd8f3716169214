import logging

import pytest
from hypothesis import given, settings, strategies as st

from bsrone.address_space import NetworkGeometry, cluster_heads
from bsrone.engine import Simulator
from bsrone.protocol import (
    BROADCAST_KINDS, JoinRejected, MessageKind, Network, ProtocolViolation, Role,
)
from bsrone.selection import AttributeVector

MK = MessageKind
STRONG = AttributeVector(50, 3000, 0, 8)
WEAK = AttributeVector(2, 100, 0, 1)


def attrs(bw):
    return AttributeVector(bw, 1000, 0, 5)


def log_of(net):
    return [(m.kind, m.src, m.dst) for m in net.messages]


def full_default(record=True, **kw):
    """Eight clusters, every head present and equally strong."""
    net = Network(NetworkGeometry(5, 2), record_messages=record, **kw)
    for h in cluster_heads(net.g):
        net.handle_join(h, STRONG, contact=None if not net.nodes else 0)
    return net


# ------------------------------------------------------------ joins


def fig5_network():
    net = Network(NetworkGeometry(5, 2), record_messages=True)
    for i in (2, 4, 8, 12, 24):
        assert net.handle_join(i, STRONG) == "activated"
    assert net.handle_join(16, WEAK) == "activated"
    return net


def test_symlinked_head_on_empty_cluster():
    net = fig5_network()
    assert net.holder_of(0) == 2
    assert net.nodes[2].symlink_id == 0
    assert net.nodes[4].symlink_id is None


def test_fig5_exchange():
    net = fig5_network()
    net.messages.clear()
    assert net.handle_join(25, AttributeVector(90, 6000, 0, 10), contact=4) == "exchanged"
    assert log_of(net) == [
        (MK.JOIN_REQUEST, 25, 4),
        (MK.ID_EXCHANGE, 16, 25),
        (MK.SUPER_NODE_UPDATE, 16, 0),
        (MK.SUPER_NODE_UPDATE, 16, 4),
        (MK.SUPER_NODE_UPDATE, 16, 8),
        (MK.SUPER_NODE_UPDATE, 16, 12),
        (MK.SUPER_NODE_UPDATE, 16, 24),
        (MK.JOIN_ACCEPT, 24, 25),
        (MK.SUBSTITUTE_SYNC, 24, 25),
    ]
    n16, n25 = net.nodes[16], net.nodes[25]
    assert (n25.position, n25.role) == (16, Role.SUPER)
    assert (n16.position, n16.role) == (25, Role.SUBSTITUTE)
    assert n16.attrs.id_exchanges == n25.attrs.id_exchanges == 1
    for target, holder in ((16, 16), (25, 25)):
        res = net.lookup(4, target)
        assert res.found and res.holder == holder
        assert res.hops == 1 and res.forwards == 1
    net.check_invariants()


def test_first_node_has_no_signals():
    net = Network(NetworkGeometry(5, 2), record_messages=True)
    assert net.handle_join(0, STRONG) == "activated"
    assert net.counter.total() == 0
    assert net.nodes[0].role == Role.SUPER and net.active_clusters() == [0]


def test_weak_newcomer_costs_request_and_accept():
    net = full_default(backup_count=0)
    net.messages.clear()
    before = net.counter.snapshot()
    assert net.handle_join(9, WEAK, contact=4) == "member"
    assert log_of(net) == [(MK.JOIN_REQUEST, 9, 4), (MK.JOIN_ACCEPT, 8, 9)]
    assert net.counter.total(BROADCAST_KINDS) == sum(before.get(k.value, 0) for k in BROADCAST_KINDS)


def test_weak_newcomer_syncs_backup_when_kept():
    net = full_default()
    net.messages.clear()
    net.handle_join(9, WEAK, contact=4)
    kinds = [m.kind for m in net.messages]
    assert MK.SUPER_NODE_UPDATE not in kinds and MK.SUBSTITUTE_PROMOTION not in kinds
    assert net.substitutes(2) == [9]


def test_join_rejections():
    net = full_default()
    with pytest.raises(JoinRejected):
        net.handle_join(4, STRONG)
    net.handle_join(25, AttributeVector(90, 6000, 0, 10), contact=0)
    # 24's owner now sits at 25's position, so 25's ID is taken
    holder = net.holder_of(25)
    assert holder is not None
    with pytest.raises(ValueError):
        net.handle_join(32, STRONG)


# --------------------------------------------------------- exchange


def test_exchange_broadcast_reaches_seven_heads():
    net = full_default()
    net.handle_join(5, WEAK, contact=0)
    net.messages.clear()
    net.id_exchange(5, 4)
    assert net.counter.count(MK.SUPER_NODE_UPDATE) >= 7
    updates = [m for m in net.messages if m.kind == MK.SUPER_NODE_UPDATE]
    assert len(updates) == 7


def test_exchange_involution():
    net = full_default()
    net.handle_join(5, WEAK, contact=0)
    state = {r: (n.position, n.role, n.attrs.id_exchanges) for r, n in net.nodes.items()}
    net.id_exchange(5, 4)
    assert net.position_of(5) == 4 and net.nodes[5].symlink_id == 4
    net.id_exchange(5, 4)
    after = {r: (n.position, n.role, n.attrs.id_exchanges) for r, n in net.nodes.items()}
    for r in state:
        pos, role, k = state[r]
        want_k = k + 2 if r in (4, 5) else k
        assert after[r] == (pos, role, want_k)
    net.check_invariants()


def test_exchange_needs_exactly_one_head():
    net = full_default()
    net.handle_join(5, WEAK, contact=0)
    net.handle_join(6, WEAK, contact=0)
    with pytest.raises(ProtocolViolation):
        net.id_exchange(5, 6)
    with pytest.raises(ProtocolViolation):
        net.id_exchange(0, 4)


# ----------------------------------------------------------- leaves


def fig6_network():
    net = Network(NetworkGeometry(5, 2), record_messages=True)
    for i, bw in [(0, 90), (4, 80), (12, 80), (20, 80), (28, 80),
                  (1, 20), (5, 10), (21, 30), (29, 15)]:
        net.handle_join(i, attrs(bw), contact=None if not net.nodes else 4)
    return net


def test_fig6_election_ring():
    net = fig6_network()
    assert net.active_clusters() == [0, 1, 3, 5, 7]
    net.messages.clear()
    assert net.handle_leave(0) == "head"
    log = log_of(net)
    ring = [(m.src, m.dst) for m in net.messages if m.kind == MK.REPLACEMENT_QUERY]
    assert ring == [(0, 4), (4, 12), (12, 20), (20, 28)]
    answer = [m for m in net.messages if m.kind == MK.REPLACEMENT_ANSWER]
    assert len(answer) == 1 and (answer[0].src, answer[0].dst) == (28, 0)
    offered_by = [o[0] for o in answer[0].payload]
    assert offered_by == [4, 20, 28]  # the lone head 12 has nothing to offer
    assert log[:4] == [(MK.SUBSTITUTE_PROMOTION, 0, h) for h in (4, 12, 20, 28)]
    # node 21 was the strongest spare node and ends up serving ID 0
    assert net.holder_of(0) == 21
    assert (MK.ID_EXCHANGE, 0, 21) in log
    assert net.substitutes(5) == [1]
    net.check_invariants()


def test_query_payload_carries_departed_head():
    net = fig6_network()
    net.messages.clear()
    net.handle_leave(0)
    for m in net.messages:
        if m.kind == MK.REPLACEMENT_QUERY:
            assert m.payload[0] == 0
            for offer in m.payload[1:]:
                head, cand, score = offer
                assert 0 <= score <= 1 and cand in net.nodes


def test_head_leave_in_eight_cluster_network():
    net = full_default()
    for m in (1, 5, 9, 13, 17, 21, 25, 29):
        net.handle_join(m, WEAK, contact=0)
    net.messages.clear()
    before = net.counter.snapshot()
    net.handle_leave(8)
    delta = {k: v - before.get(k, 0) for k, v in net.counter.snapshot().items()}
    assert delta.get(MK.SUBSTITUTE_PROMOTION.value, 0) == 7
    assert delta.get(MK.REPLACEMENT_QUERY.value, 0) == 7
    announcements = [m for m in net.messages if m.kind in BROADCAST_KINDS]
    assert len({m.kind for m in announcements}) == 2
    assert len(announcements) >= 2 * 7
    net.check_invariants()


def test_regular_leave_needs_no_broadcast():
    net = full_default()
    net.handle_join(9, WEAK, contact=0)
    net.messages.clear()
    assert net.handle_leave(9) == "member"
    assert not [m for m in net.messages if m.kind in BROADCAST_KINDS]
    assert net.search_table(8).occupied == []


def test_sole_node_leaves():
    net = Network(NetworkGeometry(5, 2))
    net.handle_join(7, STRONG)
    assert net.counter.total() == 0
    assert net.handle_leave(7) == "head"
    assert len(net) == 0 and net.active_clusters() == []
    assert net.counter.total() == 0


def test_unknown_leave_is_noop(caplog):
    net = full_default()
    total = net.counter.total()
    with caplog.at_level(logging.WARNING):
        assert net.handle_leave(3) == "absent"
    assert "unknown" in caplog.text
    assert net.counter.total() == total


def test_head_without_backup_counts_failure():
    net = full_default(backup_count=0)
    net.handle_join(9, WEAK, contact=0)
    net.handle_leave(8)
    assert net.failures == [(0.0, 2)]
    assert net.holder_of(8) == 9
    net.check_invariants()


def test_empty_cluster_deactivates():
    net = full_default()
    net.messages.clear()
    net.handle_leave(12)
    assert 3 not in net.active_clusters()
    assert [m.payload for m in net.messages if m.kind == MK.SUPER_NODE_UPDATE][0] == ("deactivate", 12)
    assert not net.failures


def test_deferred_election():
    sim = Simulator()
    holder = {}

    def sched(delay, cb):
        sim.schedule(delay, cb)

    net = Network(NetworkGeometry(5, 2), election_hop_latency=0.5, scheduler=sched)
    holder["net"] = net
    for i, bw in [(0, 90), (4, 80), (1, 20), (5, 60)]:
        net.handle_join(i, attrs(bw), contact=None if not net.nodes else 4)
    net.handle_leave(0)
    assert net.election_pending(0)
    assert net.holder_of(0) == 1
    sim.run()
    assert not net.election_pending(0)
    assert net.holder_of(0) == 5
    net.check_invariants()


def test_deferred_elections_need_scheduler():
    with pytest.raises(ValueError):
        Network(NetworkGeometry(5, 2), election_hop_latency=1.0)


# ------------------------------------------------------ maintenance


def test_substitute_is_best_member():
    net = Network(NetworkGeometry(5, 2))
    net.handle_join(4, STRONG)
    assert net.maintain_substitute(4) == []
    net.handle_join(5, attrs(10), contact=4)
    net.handle_join(6, attrs(40), contact=4)
    assert net.maintain_substitute(4) == [6]
    assert net.nodes[6].role == Role.SUBSTITUTE and net.nodes[5].role == Role.REGULAR


def test_supreme_sections_keep_more_backups():
    g = NetworkGeometry(7, 2, 4)
    net = Network(g, record_messages=True, supreme_backup_count=2)
    net.handle_join(0, STRONG)
    net.handle_join(4, STRONG, contact=0)
    net.handle_join(1, attrs(30), contact=0)
    net.handle_join(2, attrs(20), contact=0)
    net.handle_join(5, attrs(30), contact=0)
    net.handle_join(6, attrs(20), contact=0)
    assert net.substitutes(0) == [1, 2]
    assert net.substitutes(1) == [5]
    assert net.nodes[0].role == Role.SUPREME
    net.messages.clear()
    net.handle_join(3, WEAK, contact=0)
    syncs = [m.dst for m in net.messages if m.kind == MK.SUBSTITUTE_SYNC]
    assert sorted(syncs) == [1, 2]


def test_promotion_on_improvement():
    net = full_default()
    net.handle_join(9, WEAK, contact=0)
    total = net.counter.total()
    assert net.promote_on_improvement(9, WEAK) is False
    assert net.counter.total() == total
    assert net.promote_on_improvement(9, WEAK.replace(bandwidth=3)) is False
    assert net.counter.total(BROADCAST_KINDS) == 0 or net.counter.count(MK.ID_EXCHANGE) == 0
    assert net.promote_on_improvement(9, AttributeVector(100, 7200, 0, 10)) is True
    assert net.position_of(9) % 4 == 0
    assert net.exchanges == 1
    net.check_invariants()


def test_promotion_refuses_heads():
    net = full_default()
    with pytest.raises(ProtocolViolation):
        net.promote_on_improvement(4, WEAK)


# ---------------------------------------------------------- lookups


def test_default_mode_lookups_take_one_hop():
    net = full_default()
    net.handle_join(13, WEAK, contact=0)
    for h in cluster_heads(net.g):
        res = net.lookup(h, 13)
        assert res.found
        assert res.hops == (0 if h == 12 else 1)
    assert net.lookup(13, 12).hops == 0


def test_lookup_absent():
    net = full_default()
    net.handle_leave(12)
    res = net.lookup(0, 13)
    assert not res.found
    assert not net.lookup(0, 9).found


def test_scalable_lookup_bound():
    g = NetworkGeometry(9, 5, 5)
    net = Network(g)
    for h in range(0, 512, 32):
        net.handle_join(h, STRONG)
    worst = max(net.lookup(a, b).section_hops for a in range(0, 512, 32) for b in range(0, 512, 32))
    assert worst <= 4


# ------------------------------------------------------- properties

events = st.lists(st.tuples(st.booleans(), st.integers(0, 63), st.integers(1, 100),
                            st.integers(0, 10)), min_size=1, max_size=60)


@settings(max_examples=60, deadline=None)
@given(events, st.integers(0, 2), st.sampled_from([None, 4]))
def test_churn_keeps_invariants(evs, backups, section_exp):
    g = NetworkGeometry(6, 2, section_exp)
    net = Network(g, backup_count=backups, record_messages=True)
    last_total = 0
    for join, node, bw, will in evs:
        before = set(net.nodes)
        if join:
            if node in net.nodes or net.holder_of(net.position_of(node)) is not None:
                continue
            net.handle_join(node, AttributeVector(bw, 100, 0, will))
            assert set(net.nodes) == before | {node}
        else:
            present = sorted(net.nodes)
            if not present:
                continue
            gone = present[node % len(present)]
            net.handle_leave(gone)
            assert set(net.nodes) == before - {gone}
        net.check_invariants()
        total = net.counter.total()
        assert total >= last_total
        last_total = total
        act = net.activation()
        for h in net.active_head_positions():
            table = net.routing_table(h)
            assert all(e.active == act.cluster_active(e.head >> g.cluster_exp) for e in table.entries)
        for r in net.nodes:
            res = net.lookup(r, r)
            assert res.found and res.holder == r and res.forwards <= 1
            pos = net.position_of(r)
            if pos != r:
                # the ID's own node answers if it is present, otherwise nobody does
                via_symlink = net.lookup(r, pos)
                assert via_symlink.found == (pos in net.nodes)
                assert via_symlink.forwards <= 1


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 31), min_size=2, max_size=20, unique=True), st.data())
def test_every_active_cluster_has_one_head(ids, data):
    net = Network(NetworkGeometry(5, 2))
    for i in ids:
        net.handle_join(i, attrs(data.draw(st.integers(1, 100))))
    for i in data.draw(st.permutations(ids))[: len(ids) // 2]:
        net.handle_leave(i)
        for c in net.active_clusters():
            head = net.head_of(c)
            assert head is not None and net.nodes[head].role in (Role.SUPER, Role.SUPREME)
        net.check_invariants()
