import random

import pytest
from hypothesis import given, strategies as st

from mmstate.aggregation import ALL_COMBOS, HOST, LOCAL, Mode, Policy, combo_name
from mmstate.multicast import Network, NotMemberError
from mmstate.topology import Graph, generate_ts, shortest_path_nodes

import oracles
from conftest import path_graph

LEAKY = combo_name((Mode.BITWISE, Policy.LEAKY))
PERFECT = combo_name((Mode.BITWISE, Policy.PERFECT))


def test_join_on_path(path3):
    net = Network(path3)
    assert net.join(7, 0, 2) == 2
    fib = [rs.fib.get(7) for rs in net.routers]
    assert (fib[2].iif, fib[2].oifs) == (1, {HOST})
    assert (fib[1].iif, fib[1].oifs) == (0, {2})
    assert (fib[0].iif, fib[0].oifs) == (LOCAL, {1})
    assert all(e.source == 0 for e in fib)


def test_second_join_adds_only_host(path3):
    net = Network(path3)
    net.join(7, 0, 2)
    assert net.join(7, 0, 1) == 0
    assert net.routers[1].fib[7].oifs == {2, HOST}
    assert net.raw_counts().tolist() == [1, 1, 1]
    assert net.join(7, 0, 1) == 0
    assert net.routers[1].fib[7].oifs == {2, HOST}


def test_join_at_mp_itself(path3):
    net = Network(path3)
    assert net.join(1, 0, 0) == 0
    assert net.routers[0].fib[1].oifs == {HOST}
    assert net.raw_counts().tolist() == [1, 0, 0]


def test_join_then_prune_clears_state(path3):
    net = Network(path3)
    net.join(7, 0, 2)
    net.prune(7, 2)
    assert net.raw_counts().tolist() == [0, 0, 0]


def test_prune_stops_at_branch_point():
    #   0 - 1 - 2
    #       |
    #       3
    g = Graph.from_edges([(0, 1), (1, 2), (1, 3)])
    net = Network(g)
    net.join(5, 0, 2)
    net.join(5, 0, 3)
    net.prune(5, 3)
    assert net.raw_counts().tolist() == [1, 1, 1, 0]
    assert net.routers[1].fib[5].oifs == {2}


def test_prune_non_member_raises(path3):
    net = Network(path3)
    net.join(7, 0, 2)
    with pytest.raises(NotMemberError):
        net.prune(7, 1)
    with pytest.raises(NotMemberError):
        net.prune(8, 2)


def test_delivery_single_receiver_is_shortest_path():
    g = generate_ts(50, 2)
    net = Network(g)
    net.join(1, 0, 33)
    path = shortest_path_nodes(net.hop, 33, 0)[::-1]
    expect = set(zip(path, path[1:])) | {(33, HOST)}
    assert net.delivery_set(1, 0) == expect


def test_empty_tree_delivers_nothing(path3):
    assert Network(path3).delivery_set(3, 0) == set()


def test_leaky_delivery_hand_traced():
    # star around 1: MP at 0, receivers of group 0 at 2 and of group 1 at 3
    g = Graph.from_edges([(0, 1), (1, 2), (1, 3)])
    net = Network(g, [(Mode.BITWISE, Policy.LEAKY), (Mode.BITWISE, Policy.PERFECT)], width=4)
    net.join(0, 0, 2)
    net.join(1, 0, 3)
    exact = net.delivery_set(0, 0)
    assert exact == {(0, 1), (1, 2), (2, HOST)}
    # router 1 holds 0 -> {2} and 1 -> {3}; leaky merges them into 000*/{2,3}.
    # Router 3 only knows group 1, so the leaked copy dies there.
    assert net.delivery_set(0, 0, PERFECT) == exact
    assert net.delivery_set(0, 0, LEAKY) == exact | {(1, 3)}
    assert net.leak_counts(LEAKY).tolist() == [0, 2, 0, 0]


def test_path_union_oracle_100_joins():
    rng = random.Random(4)
    g = generate_ts(50, 6)
    adj = oracles.adjacency(g.node_count, g.edges)
    net = Network(g)
    members = [rng.randrange(50) for _ in range(100)]
    for m in members:
        net.join(9, 3, m)
    assert net.tree_view(9).on_tree_nodes == oracles.path_union(adj, 3, members)
    assert net.tree_view(9).receiver_edges == {(m, HOST) for m in members}


def check_trees(net, mps):
    for group, mp in mps.items():
        on = net.tree_view(group).on_tree_nodes
        if not on:
            continue
        assert mp in on
        for node in on:
            e = net.routers[node].fib[group]
            if node == mp:
                assert e.iif == LOCAL
            else:
                assert e.iif == net.hop[node, mp]
                assert node in net.routers[e.iif].fib[group].oifs
            for o in e.oifs:
                if o != HOST:
                    assert net.routers[o].fib[group].iif == node


events = st.lists(st.tuples(st.integers(0, 3), st.integers(0, 11)), max_size=60)


@given(events)
def test_replay_equivalence(seq):
    g = generate_ts(50, 0)
    mps = {0: 0, 1: 0, 2: 0, 3: 40}
    net = Network(g, ALL_COMBOS, width=4)
    members = set()
    for group, node in seq:
        if (group, node) in members:
            net.prune(group, node)
            members.discard((group, node))
        else:
            net.join(group, mps[group], node)
            members.add((group, node))
    fresh = Network(g, ALL_COMBOS, width=4)
    for group, node in sorted(members):
        fresh.join(group, mps[group], node)
    assert net.dump() == fresh.dump()
    check_trees(net, mps)
    for c in ALL_COMBOS:
        name = combo_name(c)
        if c[0] is Mode.PREFIX:
            assert net.agg_counts(name).tolist() == fresh.agg_counts(name).tolist()
        assert (net.agg_counts(name) <= net.raw_counts()).all()
    for group, mp in mps.items():
        exact = net.delivery_set(group, mp)
        for c in ALL_COMBOS:
            view = net.delivery_set(group, mp, combo_name(c))
            if c[1] is Policy.PERFECT:
                assert view == exact
            else:
                assert view >= exact


@given(st.integers(0, 49), st.sets(st.integers(0, 49), max_size=10))
def test_prune_undoes_join(frm, others):
    g = generate_ts(50, 0)
    net = Network(g)
    for o in others - {frm}:
        net.join(1, 5, o)
    before = net.dump()
    net.join(1, 5, frm)
    net.prune(1, frm)
    assert net.dump() == before


def test_o_g_state():
    g = path_graph(4)
    net = Network(g)
    for node in range(4):
        net.join(1, 0, node)
    for rs in net.routers:
        assert len(rs.fib) == 1


def test_drop_group(path3):
    net = Network(path3)
    net.join(1, 0, 2)
    net.join(2, 0, 1)
    assert net.drop_group(1) == 3
    assert net.raw_counts().tolist() == [1, 1, 0]
