from __future__ import annotations

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robust_regret.graphs import (
    adjacency,
    dijkstra,
    global_min_cut,
    kruskal,
    low_degree_fraction,
    max_flow_min_cut,
    path_edges,
    prune_leaves,
    tree_path,
)
from robust_regret.generators import gen_random

from .conftest import make
from .reference import random_tree_pairs


def _nx(inst, w):
    g = nx.Graph()
    g.add_nodes_from(range(inst.n))
    for i, e in enumerate(inst.edges):
        g.add_edge(e.u, e.v, weight=float(w[i]))
    return g


def test_kruskal_breaks_ties_by_index():
    ends = [(0, 1), (1, 2), (0, 2)]
    assert kruskal(3, ends, [1, 1, 1]) == [0, 1]
    assert kruskal(3, ends, [2, 1, 1]) == [1, 2]


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32), n=st.integers(2, 9))
def test_kruskal_matches_networkx_weight(seed, n):
    inst = gen_random(seed, n, min(n * (n - 1) // 2, n + 3))
    w = inst.upper
    tree = kruskal(inst.n, inst.endpoints, w)
    ref = nx.minimum_spanning_tree(_nx(inst, w)).size(weight="weight")
    assert w[tree].sum() == pytest.approx(ref)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32), n=st.integers(2, 9))
def test_dijkstra_matches_networkx(seed, n):
    inst = gen_random(seed, n, min(n * (n - 1) // 2, n + 4))
    w = inst.lower + 0.5
    dist, pred = dijkstra(adjacency(inst), w, 0)
    ref = nx.single_source_dijkstra_path_length(_nx(inst, w), 0)
    for v in range(inst.n):
        assert dist[v] == pytest.approx(ref[v])
        assert w[path_edges(inst, pred, 0, v)].sum() == pytest.approx(ref[v])


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32), n=st.integers(2, 9))
def test_push_relabel_matches_networkx(seed, n):
    rng = np.random.default_rng(seed)
    arcs = [(a, b, float(rng.integers(0, 5))) for a in range(n) for b in range(a + 1, n) if rng.random() < 0.6]
    g = nx.Graph()
    g.add_nodes_from(range(n))
    for a, b, c in arcs:
        g.add_edge(a, b, capacity=c)
    val, side = max_flow_min_cut(n, arcs, 0, n - 1)
    assert val == pytest.approx(nx.maximum_flow_value(g, 0, n - 1))
    assert 0 in side and n - 1 not in side
    crossing = sum(c for a, b, c in arcs if (a in side) != (b in side))
    assert crossing == pytest.approx(val)


def test_global_min_cut():
    arcs = [(0, 1, 3), (1, 2, 3), (2, 0, 3), (2, 3, 1), (3, 4, 5)]
    val, side = global_min_cut(5, arcs)
    assert val == 1
    assert side == {0, 1, 2}


def test_tree_path_and_pruning():
    inst = make(5, [(0, 1, 1, 1), (1, 2, 1, 1), (1, 3, 1, 1), (3, 4, 1, 1)], {0, 2})
    assert tree_path(inst, range(4), 0, 4) == [0, 2, 3]
    assert prune_leaves(inst, range(4), {0, 2}) == {0, 1}
    with pytest.raises(ValueError):
        tree_path(inst, [0, 1], 0, 4)


def test_low_degree_fraction_star():
    assert low_degree_fraction(5, [(0, i) for i in range(1, 5)]) == 0.8


def test_low_degree_majority_on_random_trees():
    rng = np.random.default_rng(3)
    for _ in range(200):
        n = int(rng.integers(1, 40))
        assert low_degree_fraction(n, random_tree_pairs(rng, n)) > 0.5
