import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from bsrone.address_space import ActivationMap, ModeError, NetworkGeometry, ring_distance, section_heads
from bsrone.tables import (
    DomainError, RoutingError, SupremeOverlay, build_default_routing_table, build_search_table,
    build_supreme_tables, fallback_head, next_hop, resolve_fallbacks, supreme_offsets,
)

from oracles import bfs_hops, hop_graph, offsets_by_enumeration


def test_search_table_full_and_empty():
    g = NetworkGeometry(5, 2)
    t = build_search_table(0, {1, 2, 3}, g)
    assert len(t) == 3 and t.occupied == [1, 2, 3]
    assert build_search_table(0, set(), g).slots == (None, None, None)


def test_search_table_partial():
    t = build_search_table(24, {25}, NetworkGeometry(5, 2))
    assert t.slots == (25, None, None)
    assert t.contains(25) and not t.contains(26)


def test_search_table_rejects_outsider():
    g = NetworkGeometry(5, 2)
    with pytest.raises(DomainError):
        build_search_table(24, {28}, g)
    with pytest.raises(DomainError):
        build_search_table(25, set(), g)


def test_default_routing_table():
    g = NetworkGeometry(5, 2)
    t = build_default_routing_table(0, ActivationMap.full(g), g)
    assert [e.head for e in t.entries] == [4, 8, 12, 16, 20, 24, 28]
    t16 = build_default_routing_table(16, ActivationMap.from_heads([16, 20], g), g)
    heads = [e.head for e in t16.entries]
    assert heads[0] == 20 and heads[-1] == 12
    assert heads == sorted(heads, key=lambda h: (h - 16) % 32)
    assert t16.active_heads() == [20]


def test_single_cluster_routing_table_is_empty():
    g = NetworkGeometry(4, 4)
    assert len(build_default_routing_table(0, ActivationMap.full(g), g)) == 0


def test_default_mode_is_one_hop():
    g = NetworkGeometry(6, 2)
    heads = [0, 8, 20, 44, 60]
    act = ActivationMap.from_heads(heads, g)
    for h in heads:
        t = build_default_routing_table(h, act, g)
        assert set(t.active_heads()) == set(heads) - {h}


@pytest.mark.parametrize("n,s,expected", [
    (9, 5, [32, 64, 128, 160, 192, 256]),
    (6, 5, [32]),
    (10, 5, [32, 64, 128, 256, 288, 320, 384, 512]),
])
def test_supreme_offsets_examples(n, s, expected):
    assert supreme_offsets(NetworkGeometry(n, 2, s)) == expected


def test_supreme_offsets_against_enumeration():
    for n in range(2, 16):
        for s in range(1, n + 1):
            offs = supreme_offsets(NetworkGeometry(n, 1, s))
            assert offs == offsets_by_enumeration(n, s)
            assert offs == sorted(set(offs)) and offs[-1] == 2 ** (n - 1)


def test_supreme_offsets_need_scalable_mode():
    with pytest.raises(ModeError):
        supreme_offsets(NetworkGeometry(9, 2))


def _active(g, heads):
    return ActivationMap.from_heads(heads, g)


def test_fallback_to_predecessor():
    g = NetworkGeometry(9, 2, 5)
    heads = [h for h in section_heads(g) if h not in (192, 416)]
    t = resolve_fallbacks(build_supreme_tables(128, g), _active(g, heads), g)
    cw = {e.target: e.hop for e in t.clockwise}
    ccw = {e.target: e.hop for e in t.counterclockwise}
    assert cw[192] == 160
    # antipode inactive: the two tables fall back to different sides
    assert t.clockwise[-1].target == t.counterclockwise[-1].target == 384
    heads2 = [h for h in heads if h != 384]
    t2 = resolve_fallbacks(build_supreme_tables(128, g), _active(g, heads2), g)
    assert t2.clockwise[-1].hop == 352
    assert t2.counterclockwise[-1].hop == 448
    assert t2.clockwise[-1].hop != t2.counterclockwise[-1].hop
    assert ccw[0] == 0


def test_fallback_identity_when_all_active():
    g = NetworkGeometry(9, 2, 5)
    for owner in section_heads(g):
        raw = build_supreme_tables(owner, g)
        t = resolve_fallbacks(raw, ActivationMap.full(g), g)
        assert all(e.resolved for e in t.clockwise + t.counterclockwise)


def test_fallback_self_loop_when_alone():
    g = NetworkGeometry(9, 2, 5)
    t = resolve_fallbacks(build_supreme_tables(64, g), _active(g, [64]), g)
    assert all(e.hop == 64 for e in t.clockwise + t.counterclockwise)
    assert SupremeOverlay(g, _active(g, [64])).route(64, 300) == [64]


def test_clockwise_fallback_never_farther():
    rng = random.Random(3)
    g = NetworkGeometry(10, 2, 5)
    heads = section_heads(g)
    for _ in range(50):
        act = _active(g, [h for h in heads if rng.random() < 0.5] + [0])
        t = resolve_fallbacks(build_supreme_tables(0, g), act, g)
        for e in t.clockwise:
            assert e.hop % g.size <= e.target or e.hop == 0


def test_next_hop_examples():
    g = NetworkGeometry(9, 2, 5)
    ov = SupremeOverlay(g, ActivationMap.full(g))
    assert ov.route(0, 260) == [0, 256]
    assert ov.route(0, 226) == [0, 192, 224]
    assert next_hop(96, 100, ov.tables(96), g) == 96


def test_next_hop_failure_surfaces():
    g = NetworkGeometry(9, 2, 5)
    raw = build_supreme_tables(0, g)
    lonely = resolve_fallbacks(raw, _active(g, [0]), g)
    with pytest.raises(RoutingError):
        next_hop(0, 300, lonely, g)


@pytest.mark.parametrize("sections", [2, 4, 8, 16, 32, 64, 128, 256])
def test_hop_bound_full_activation(sections):
    s = 5
    n = s + int(math.log2(sections))
    g = NetworkGeometry(n, 2, s)
    ov = SupremeOverlay(g, ActivationMap.full(g))
    heads = section_heads(g)
    adj = hop_graph(n, s, set(heads))
    bound = math.ceil(math.log2(sections))
    worst = 0
    for a in heads:
        dist = bfs_hops(adj, a)
        for b in heads:
            hops = len(ov.route(a, b)) - 1
            assert hops >= dist[b]
            worst = max(worst, hops)
    assert worst <= bound


def test_halving_property():
    for n in range(6, 13):
        s = 5 if n > 6 else 3
        g = NetworkGeometry(n, 1, s)
        ov = SupremeOverlay(g, ActivationMap.full(g))
        offs = supreme_offsets(g)
        gaps = [b - a for a, b in zip([0] + offs, offs)]
        for a in section_heads(g):
            for b in section_heads(g):
                if a == b:
                    continue
                d = ring_distance(a, b, g)
                hop = next_hop(a, b, ov.tables(a), g)
                after = ring_distance(hop, b, g)
                assert after < d
                assert after <= d / 2 or after <= max(gaps)


def _max_inactive_run(g, act):
    run = best = 0
    for idx in list(range(g.section_count)) * 2:
        run = 0 if act.section_active(idx) else run + 1
        best = max(best, run)
    return min(best, g.section_count)


@settings(max_examples=60, deadline=None)
@given(st.integers(6, 10), st.data())
def test_fallback_monotonicity(n, data):
    s = 3
    g = NetworkGeometry(n, 1, s)
    heads = section_heads(g)
    chosen = data.draw(st.sets(st.sampled_from(heads), min_size=1))
    act = _active(g, chosen)
    ov = SupremeOverlay(g, act)
    full = SupremeOverlay(g, ActivationMap.full(g))
    adj = hop_graph(n, s, set(chosen))
    skip = _max_inactive_run(g, act)
    for a in sorted(chosen):
        dist = bfs_hops(adj, a)
        for target in heads:
            path = ov.route(a, target)
            dest = fallback_head(target, act, g)
            assert path[-1] == dest
            assert len(path) - 1 >= dist[dest]
            assert len(path) - 1 <= len(full.route(a, dest)) - 1 + skip
