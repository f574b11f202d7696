import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lrwpan.analog import RadioParams, packet_error_rate
from lrwpan.topology import (DOWN, UP, Node, TopologyError, build_conflict_sets, build_links,
                             build_routing_tree, build_topology, dump_graph, edge_weight,
                             explicit_graph)

from conftest import explicit_nodes, geometric, grid_positions


def test_needs_two_nodes():
    with pytest.raises(TopologyError):
        build_links([Node(0, (0.0, 0.0), True)], RadioParams())


def test_missing_positions():
    with pytest.raises(TopologyError):
        build_links([Node(0, (0.0, 0.0), True), Node(1, None)], RadioParams())


def test_exactly_one_gateway():
    with pytest.raises(TopologyError):
        build_links([Node(0, (0.0, 0.0)), Node(1, (1.0, 0.0))], RadioParams())


def test_close_pair_is_error_free():
    g = build_links([Node(0, (0.0, 0.0), True), Node(1, (1.0, 0.0))], RadioParams(0.0, -95.0))
    assert g.ber[0, 1] == 0.0
    assert g.in_range[0, 1] and g.in_range[1, 0]


def test_explicit_half_ber_link():
    topo = build_topology(explicit_graph(explicit_nodes(2), [{"nodes": [0, 1], "ber": 0.5}], []))
    assert topo.links[0].per_packet == pytest.approx(1.0)
    assert topo.links[0].per_packet == packet_error_rate(0.5, 127)


def test_explicit_duplicate_link():
    with pytest.raises(TopologyError):
        explicit_graph(explicit_nodes(2), [{"nodes": [0, 1], "ber": 0.0}, {"nodes": [1, 0], "ber": 0.1}], [])


def test_explicit_asymmetric_predicate_rejected():
    adj = np.zeros((2, 2), dtype=bool)
    adj[0, 1] = True
    with pytest.raises(TopologyError):
        explicit_graph(explicit_nodes(2), [{"nodes": [0, 1], "ber": 0.0}], adj)


def test_line_is_chain():
    # 3 nodes in a line, error-free links only between neighbours
    links = [{"nodes": [0, 1], "ber": 0.0}, {"nodes": [1, 2], "ber": 0.0}]
    tree = build_routing_tree(explicit_graph(explicit_nodes(3), links, []))
    assert tree.parent == [None, 0, 1]
    assert tree.descendant_count == [2, 1, 0]


def test_negligible_ber_minimises_hops():
    links = [{"nodes": [a, b], "ber": 0.0} for a in range(3) for b in range(a + 1, 3)]
    tree = build_routing_tree(explicit_graph(explicit_nodes(3), links, []))
    assert tree.parent == [None, 0, 0]


def test_star():
    topo = geometric([(0.0, 0.0), (10.0, 0.0), (-10.0, 0.0), (0.0, 10.0)])
    assert topo.tree.parent[1:] == [0, 0, 0]
    assert topo.tree.descendant_count[0] == 3


def test_low_ber_two_hop_beats_lossy_direct():
    links = [{"nodes": [0, 1], "ber": 1e-6}, {"nodes": [1, 2], "ber": 1e-6},
             {"nodes": [0, 2], "ber": 0.1}]
    assert 2 * edge_weight(1e-6) < edge_weight(0.1)
    tree = build_routing_tree(explicit_graph(explicit_nodes(3), links, []))
    assert tree.parent[2] == 1


def test_tie_break_prefers_smaller_parent():
    # gateway 0 -> {1, 2} -> 3, both routes equal cost
    links = [{"nodes": [0, 1], "ber": 0.0}, {"nodes": [0, 2], "ber": 0.0},
             {"nodes": [1, 3], "ber": 0.0}, {"nodes": [2, 3], "ber": 0.0}]
    tree = build_routing_tree(explicit_graph(explicit_nodes(4), links, []))
    assert tree.parent[3] == 1


def test_disconnected_reports_nodes():
    g = explicit_graph(explicit_nodes(4), [{"nodes": [0, 1], "ber": 0.0}], [])
    with pytest.raises(TopologyError, match=r"\[2, 3\]"):
        build_routing_tree(g)


def _fully_connected(n):
    links = [{"nodes": [0, v], "ber": 0.0} for v in range(1, n)]
    pairs = [[a, b] for a in range(n) for b in range(a + 1, n)]
    return build_topology(explicit_graph(explicit_nodes(n), links, pairs))


def test_single_link_network_has_empty_sets():
    topo = build_topology(explicit_graph(explicit_nodes(2), [{"nodes": [0, 1], "ber": 0.0}], [[0, 1]]))
    for s in (topo.conflicts.ss, topo.conflicts.rs, topo.conflicts.sr, topo.conflicts.rr):
        # the down link (0,1) has a different sender, so only same-sender links are excluded
        assert all(lid not in s[lid] for lid in range(2))
    one_way = build_conflict_sets(topo.links[:1], topo.graph.in_range)
    assert one_way.ss == one_way.rs == one_way.sr == one_way.rr == [frozenset()]


def test_disjoint_links_in_full_range():
    # tree 1 -> 0 <- 2 <- 3: links (1,0) and (3,2) share no endpoint
    links = [{"nodes": [0, 1], "ber": 0.0}, {"nodes": [0, 2], "ber": 0.0}, {"nodes": [2, 3], "ber": 0.0}]
    pairs = [[a, b] for a in range(4) for b in range(a + 1, 4)]
    topo = build_topology(explicit_graph(explicit_nodes(4), links, pairs))
    assert topo.tree.parent == [None, 0, 0, 2]
    l1, l2 = topo.up_link[1], topo.up_link[3]
    cs = topo.conflicts
    for s in (cs.ss, cs.rs, cs.sr, cs.rr):
        assert l2 in s[l1] and l1 in s[l2]


def test_same_sender_excluded():
    topo = _fully_connected(3)
    # both downstream links are sent by the gateway
    d1, d2 = topo.down_link[1], topo.down_link[2]
    cs = topo.conflicts
    for s in (cs.ss, cs.rs, cs.sr, cs.rr):
        assert d2 not in s[d1] and d1 not in s[d2]


def test_link_sets_and_direction():
    topo = geometric(grid_positions(3, 3, 30.0), gateway=4)
    ups = [l for l in topo.links if l.direction == UP]
    downs = [l for l in topo.links if l.direction == DOWN]
    assert len(ups) == len(downs) == topo.size - 1
    assert {(l.sender, l.receiver) for l in ups} == {(l.receiver, l.sender) for l in downs}


def test_dump_graph_is_json_ready():
    import json
    topo = geometric(grid_positions(2, 2, 20.0))
    doc = json.loads(json.dumps(dump_graph(topo)))
    assert len(doc["links"]) == 6
    assert doc["parent"][0] is None


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 30), seed=st.integers(0, 2 ** 32 - 1), side=st.floats(20.0, 400.0))
def test_tree_and_conflict_invariants(n, seed, side):
    rng = np.random.default_rng(seed)
    pos = [tuple(p) for p in rng.uniform(0, side, size=(n, 2))]
    if len({p for p in pos}) < n:
        return
    topo = geometric(pos, radio=RadioParams(0.0, -95.0, -90.0))
    tree = topo.tree
    # every node reaches the root
    for v in range(n):
        assert tree.path_to_root(v)[-1] == tree.gateway
    assert tree.descendant_count[tree.gateway] == n - 1
    for v in range(n):
        assert tree.descendant_count[v] == sum(1 + tree.descendant_count[c] for c in tree.children[v])
    assert sum(tree.descendant_count) == sum(tree.depth)
    ids = {l.id for l in topo.links}
    cs = topo.conflicts
    for l in topo.links:
        for s in (cs.ss, cs.rs, cs.sr, cs.rr):
            assert s[l.id] <= ids
            assert all(topo.links[j].sender != l.sender for j in s[l.id])
        for j in cs.ss[l.id]:
            # symmetric predicate: sender pairs appear in each other's SS
            assert l.id in cs.ss[j]
