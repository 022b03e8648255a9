from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robust_regret.core import EdgeMultiset, derived_weights, is_steiner_tree
from robust_regret.double_approx import (
    LN4,
    PhaseStats,
    RobustParams,
    SwapCache,
    budget_grid,
    constrained_shortest_path,
    derive_constants,
    double_approx,
    double_approx_all,
    geometric_grid,
    greedy_swap,
    maincond_holds,
    preset,
    round_up,
)
from robust_regret.exact import enumerate_steiner_trees
from robust_regret.generators import gen_random

from .conftest import make
from .reference import simple_paths


def test_fast_preset_constants():
    p = preset("fast")
    assert maincond_holds(p)
    assert p.margin == pytest.approx(0.2094, abs=1e-4)
    assert p.eta == pytest.approx(0.1638, abs=1e-4)
    assert p.alpha == pytest.approx((4 * 6 + 4 + 2 + 0.05) * 64 + 1)
    assert p.beta == 64


def test_optimal_preset_constants():
    p = preset("paper-optimal")
    a_side, b_side = p.theorem_constants()
    assert a_side - p.eps == pytest.approx(2 * p.alpha * LN4)
    assert 2 * p.alpha * LN4 == pytest.approx(2754.56, abs=0.01)
    assert b_side == pytest.approx(104.35, abs=0.01)
    assert p.margin == pytest.approx(-0.2419, abs=1e-4)


def test_small_gamma_prime_fails_maincond():
    assert not maincond_holds(derive_constants(16, 2, 4, 0.05))


@pytest.mark.parametrize("args", [(1, 6, 4, 0.05), (16, 6, 0, 0.05), (16, 6, 4, 0.2), (16, 6, 4, 0)])
def test_parameter_domain(args):
    with pytest.raises(ValueError):
        RobustParams(*args)


def test_unknown_preset():
    with pytest.raises(ValueError, match="unknown preset"):
        preset("nope")


def test_geometric_grid():
    g = geometric_grid(1, 10, 2)
    assert g == [1, 2, 4, 8, 16]
    assert geometric_grid(3, 3, 2) == [3]
    with pytest.raises(ValueError):
        geometric_grid(0, 1, 2)


def test_budget_grid_spans_range():
    g = budget_grid(2.0, 0.1, 5)
    assert g[0] == pytest.approx(0.04)
    assert g[-1] >= 2.0 and g[-2] < 2.0
    assert budget_grid(0.0, 0.1, 5) == [0.0]


def test_round_up_granularity():
    out = round_up([0.0, 0.3, 1.0], 0.25)
    assert list(out) == [0.0, 0.5, 1.0]


def _brute_best(inst, w, w2, s, t, budget):
    feas = [p for p in simple_paths(inst, s, t) if w2[p].sum() <= budget + 1e-9]
    return min((w[p].sum() for p in feas), default=None)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32), frac=st.floats(0.0, 1.0), eps=st.sampled_from([0.1, 0.5]))
def test_constrained_path_contract(seed, frac, eps):
    inst = gen_random(seed, 6, 10)
    w, w2 = inst.lower, inst.upper
    s, t = 0, inst.n - 1
    hi = max(w2[p].sum() for p in simple_paths(inst, s, t))
    budget = frac * hi
    ref = _brute_best(inst, w, w2, s, t, budget)
    exact = constrained_shortest_path(inst, w, w2, s, t, budget, None)
    approx = constrained_shortest_path(inst, w, w2, s, t, budget, eps)
    if ref is None:
        assert exact is None
    else:
        assert exact.w == pytest.approx(ref)
        assert exact.w2 <= budget + 1e-9
        assert approx is not None
        assert approx.w <= ref + 1e-9
        assert approx.w2 <= (1 + eps) * budget + 1e-9
    for p in (exact, approx):
        if p is not None:
            assert len(set(p.vertices)) == len(p.vertices)
            assert p.vertices[0] == s and p.vertices[-1] == t


def _ratio_gadget():
    # tree 0-1-2 (terminals); outside paths 0-3-1 and 1-4-2
    inst = make(5, [(0, 1, 0, 0), (1, 2, 0, 0), (0, 3, 0, 0), (3, 1, 0, 0), (1, 4, 0, 0), (4, 2, 0, 0)], {0, 1, 2})
    c = np.array([3, 3, 0.5, 0.5, 1, 1])
    c2 = np.array([0, 0, 2, 2, 0.25, 0.25])
    return inst, c, c2, EdgeMultiset((1, 1, 0, 0, 0, 0))


def test_greedy_swap_prefers_lowest_ratio():
    inst, c, c2, tree = _ratio_gadget()
    # swap A: dc = 2, dc' = 4 (ratio 2); swap B: dc = 1, dc' = 0.5 (ratio 0.5)
    out, stop = greedy_swap(inst, tree, c, c2, chi_p=4.0, rho_min=0.5, eps=0.05)
    assert stop == 0
    assert set(out.support) == {0, 4, 5}


def test_greedy_swap_respects_rho_min():
    inst, c, c2, tree = _ratio_gadget()
    out, stop = greedy_swap(inst, tree, c, c2, chi_p=4.0, rho_min=1.5, eps=0.05)
    assert stop == 0
    assert set(out.support) == {1, 2, 3}
    same, stop = greedy_swap(inst, tree, c, c2, chi_p=4.0, rho_min=2.5, eps=0.05)
    assert stop == 1 and same == tree


def test_greedy_swap_respects_budget():
    inst, c, c2, tree = _ratio_gadget()
    # swap A needs c'-budget 4; with chi' = 1 only swap B is reachable
    out, stop = greedy_swap(inst, tree, c, c2, chi_p=1.0, rho_min=1.5, eps=0.05)
    assert stop == 1


def test_greedy_swap_frozenset_and_cache():
    inst, c, c2, tree = _ratio_gadget()
    cache = SwapCache()
    a, _ = greedy_swap(inst, frozenset(tree.support), c, c2, 4.0, 0.5, 0.05, cache)
    b, _ = greedy_swap(inst, frozenset(tree.support), c, c2, 4.0, 0.5, 0.05, cache)
    assert isinstance(a, frozenset) and a == b
    assert (cache.hits, cache.misses) == (1, 1)


def _backward_gadget():
    # terminals 0, 1, 2 around centre 3; swapping the chord 0-1 for spoke 1-3 saves
    # 0.125 of c', below the local-search threshold (0.05/4) * 10.125 but above the
    # backward-phase threshold (0.05/4) * 1.25
    inst = make(4, [(0, 3, 0, 0), (1, 3, 0, 0), (2, 3, 0, 0), (0, 1, 0, 0)], {0, 1, 2})
    c = np.ones(4)
    c2 = np.array([10, 10, 10, 10.125])
    return inst, c, c2, EdgeMultiset((1, 0, 1, 1))


def test_backward_phase_swaps():
    inst, c, c2, start = _backward_gadget()
    stats = PhaseStats()
    trees = double_approx(inst, c, c2, chi=3.0, chi_p=1.25, params=preset("fast"), stats=stats, start=start)
    assert trees[0] == start
    assert stats.forward_swaps == 0
    # one backward swap per rho guess, each starting from the same tree
    assert stats.backward_swaps == len(geometric_grid(1.0, 3.0, 1.05))
    assert stats.outer_iterations == 1
    star = EdgeMultiset((1, 1, 1, 0))
    assert star in trees
    assert all(is_steiner_tree(inst, t) for t in trees)


def test_double_approx_checks_granularity():
    inst, c, c2, _ = _backward_gadget()
    with pytest.raises(ValueError, match="multiple"):
        double_approx(inst, c, c2 + 0.001, chi=3.0, chi_p=1.25, params=preset("fast"))


def _check_guarantee(inst, c, c2, params):
    trees = [t for _, ts in double_approx_all(inst, c, c2, params, SwapCache()) for t in ts]
    assert all(is_steiner_tree(inst, t) for t in trees)
    arrays = [t.as_array() for t in trees]
    for sol in enumerate_steiner_trees(inst):
        s = sol.as_array()
        ok = any(
            c @ (a * (1 - s)) <= 4 * params.gamma * (c @ (s * (1 - a))) + 1e-9
            and c2 @ a <= params.cprime_bound * (c2 @ s) + 1e-9
            for a in arrays
        )
        assert ok, f"no returned tree covers {sol.support}"


@pytest.mark.parametrize("seed", range(3))
def test_bicriteria_guarantee_small(seed):
    inst = gen_random(seed, 5, 7)
    x = np.random.default_rng(seed).uniform(0, 1, inst.m)
    c, c2 = derived_weights(inst, x)
    _check_guarantee(inst, c, c2, preset("fast"))


def test_zero_cprime_branch():
    inst = gen_random(1, 5, 7, zero_lower=True)
    c, c2 = derived_weights(inst, np.full(inst.m, 0.5))
    assert not c2.any()
    runs = list(double_approx_all(inst, c, c2, preset("fast")))
    assert [chi for chi, _ in runs] == [0.0]
    _check_guarantee(inst, c, c2, preset("fast"))


def test_iteration_cap_is_logarithmic():
    inst = gen_random(4, 6, 9)
    c, c2 = derived_weights(inst, np.full(inst.m, 0.3))
    stats = PhaseStats()
    list(double_approx_all(inst, c, c2, preset("fast"), stats=stats))
    p = preset("fast")
    pos = c[c > 0]
    per_run = 2 * (math.ceil(math.log(inst.n * c.max() / pos.min()) / math.log(1 + p.eta)) + 1)
    runs = len(list(double_approx_all(inst, c, c2, p))) or 1
    assert stats.outer_iterations <= runs * per_run
