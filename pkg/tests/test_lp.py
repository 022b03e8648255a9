from __future__ import annotations

import numpy as np
import pytest
from scipy.optimize import linprog

from robust_regret.core import EdgeMultiset, Kind
from robust_regret.double_approx import derive_constants, preset
from robust_regret.exact import box_vertices, free_edges, min_regret_solution, opt_values, regret_of
from robust_regret.generators import gen_random
from robust_regret.lp import (
    CuttingPlaneError,
    FractionalSolution,
    LinearConstraint,
    LPStatus,
    PivotLimitError,
    Provenance,
    Sense,
    cutting_plane_solve,
    general_oracle,
    rrst_oracle,
    rrst_oracle_zlb,
    rrtsp_oracle,
    separate_steiner_cuts,
    separate_tsp_constraints,
    simplex_solve,
    solve_standard,
    zlb_oracle,
)
from robust_regret.lp.model import R, xkey, ykey

from .conftest import make
from .reference import tableau_simplex

SENSE = {"<=": Sense.LE, ">=": Sense.GE, "=": Sense.EQ}


def random_lp(seed: int):
    rng = np.random.default_rng(seed)
    m, n = int(rng.integers(1, 8)), int(rng.integers(1, 8))
    A = rng.integers(-4, 5, (m, n)).astype(float)
    x0 = rng.uniform(0, 2, n)
    senses = [("<=", ">=", "=")[k] for k in rng.integers(0, 3, m)]
    slack = {"<=": 1.0, ">=": -1.0, "=": 0.0}
    b = np.round(A @ x0 + np.array([slack[s] * rng.uniform(0, 2) for s in senses]), 3)
    c = rng.integers(-5, 6, n).astype(float)
    ub = np.where(rng.random(n) < 0.5, np.inf, rng.integers(1, 4, n)).astype(float)
    return A, senses, b, c, ub


@pytest.mark.parametrize("seed", range(60))
def test_simplex_matches_highs(seed):
    A, senses, b, c, ub = random_lp(seed)
    res = solve_standard(A, [SENSE[s] for s in senses], b, c, ub)
    le = [i for i, s in enumerate(senses) if s == "<="]
    ge = [i for i, s in enumerate(senses) if s == ">="]
    eq = [i for i, s in enumerate(senses) if s == "="]
    A_ub = np.vstack([A[le], -A[ge]]) if le or ge else None
    b_ub = np.concatenate([b[le], -b[ge]]) if le or ge else None
    ref = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A[eq] if eq else None, b_eq=b[eq] if eq else None,
                  bounds=[(0, None if np.isinf(u) else u) for u in ub], method="highs")
    expected = {0: LPStatus.OPTIMAL, 2: LPStatus.INFEASIBLE, 3: LPStatus.UNBOUNDED}[ref.status]
    assert res.status is expected
    if expected is LPStatus.OPTIMAL:
        assert res.objective == pytest.approx(ref.fun, abs=1e-7)
        assert np.all(res.x >= -1e-9) and np.all(res.x <= ub + 1e-9)


def test_reference_tableau_agrees_on_textbook_lp():
    # max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18  ->  36 at (2, 6)
    A = np.array([[1, 0], [0, 2], [3, 2]], dtype=float)
    b = np.array([4, 12, 18], dtype=float)
    c = np.array([-3, -5], dtype=float)
    ub = np.full(2, np.inf)
    status, x, val = tableau_simplex(A, ["<="] * 3, b, c, ub)
    res = solve_standard(A, [Sense.LE] * 3, b, c, ub)
    assert status == "optimal" and val == pytest.approx(-36)
    assert res.objective == pytest.approx(-36)
    assert np.allclose(res.x, [2, 6]) and np.allclose(x, [2, 6])


def test_beale_cycling_example_terminates():
    # Beale's LP cycles under largest-coefficient pricing without an anti-cycling rule
    c = np.array([-0.75, 150, -0.02, 6])
    A = np.array([[0.25, -60, -0.04, 9], [0.5, -90, -0.02, 3], [0, 0, 1, 0]])
    b = np.array([0, 0, 1.0])
    res = solve_standard(A, [Sense.LE] * 3, b, c, np.full(4, np.inf))
    assert res.status is LPStatus.OPTIMAL
    assert res.objective == pytest.approx(-0.05)


def test_status_cases():
    inf = np.full(1, np.inf)
    assert solve_standard(np.array([[1.0]]), [Sense.GE], np.array([2.0]), np.array([1.0]), np.array([1.0])).status \
        is LPStatus.INFEASIBLE
    assert solve_standard(np.zeros((0, 1)), [], np.zeros(0), np.array([-1.0]), inf).status is LPStatus.UNBOUNDED
    res = solve_standard(np.zeros((0, 1)), [], np.zeros(0), np.array([-1.0]), np.array([2.5]))
    assert res.objective == pytest.approx(-2.5)


def test_pivot_limit():
    A, senses, b, c, ub = random_lp(3)
    with pytest.raises(PivotLimitError):
        solve_standard(A, [SENSE[s] for s in senses], b, c, ub, max_pivots=0)


def test_linear_constraint_build_and_violation():
    con = LinearConstraint.build([("a", 1.0), ("b", 2.0), ("a", 1.0), ("c", 0.0)], Sense.GE, 3.0, Provenance.CUT)
    assert con.coefficients == (("a", 2.0), ("b", 2.0))
    assert con.violation({"a": 0.5}) == pytest.approx(2.0)
    assert con.violation({"a": 1, "b": 1}) < 0
    with pytest.raises(ValueError):
        LinearConstraint.build({"a": float("nan")}, Sense.LE, 0.0, Provenance.CUT)


def test_simplex_solve_keyed():
    cons = [LinearConstraint.build({"x": 1, "y": 1}, Sense.GE, 1.5, Provenance.CUT)]
    res, vals = simplex_solve(cons, {"x": 1.0, "y": 2.0}, upper={"x": 1.0})
    assert res.status is LPStatus.OPTIMAL
    assert vals == pytest.approx({"x": 1.0, "y": 0.5})


def test_steiner_cut_separation(diamond):
    res = separate_steiner_cuts(diamond, [0.5, 0.5, 0.2, 0.2, 0.2])
    assert not res.feasible
    assert res.violation == pytest.approx(0.1)
    assert res.constraint.sense is Sense.GE
    assert separate_steiner_cuts(diamond, [0.5, 0.5, 0.3, 0.3, 0.2]).feasible


def test_tsp_separation_order():
    inst = make(4, [(0, 1, 1, 1), (1, 2, 1, 1), (2, 3, 1, 1), (3, 0, 1, 1), (0, 2, 1, 1), (1, 3, 1, 1)], range(4),
                Kind.TSP)
    res = separate_tsp_constraints(inst, {}, {})
    assert res.constraint.provenance is Provenance.DEGREE
    # two disjoint 2-cycles: degrees fine, global cut 0
    y = {(0, 1): 1.0, (2, 3): 1.0, (0, 2): 0, (0, 3): 0, (1, 2): 0, (1, 3): 0}
    y = {k: (2.0 if v else 0.0) for k, v in y.items()}
    assert separate_tsp_constraints(inst, y, {}).constraint.provenance is Provenance.CUT
    ring = {(0, 1): 1.0, (1, 2): 1.0, (2, 3): 1.0, (0, 3): 1.0, (0, 2): 0.0, (1, 3): 0.0}
    res = separate_tsp_constraints(inst, ring, {})
    assert res.constraint.provenance is Provenance.FLOW
    flows = {(e, u, v): 0.0 for e in range(6) for u, v in ring}
    for (u, v), e in {(0, 1): 0, (1, 2): 1, (2, 3): 2, (0, 3): 3}.items():
        flows[(e, u, v)] = 1.0
    assert separate_tsp_constraints(inst, ring, flows).feasible


def test_tsp_oracle_rows(triangle_tsp):
    frac = FractionalSolution(Kind.TSP, np.ones(3), 0.0)
    res = rrtsp_oracle(triangle_tsp, frac)
    assert not res.feasible
    assert res.constraint.provenance is Provenance.REGRET
    w = res.constraint.witness
    assert w.adversary.mult.count(2) == 2
    big = FractionalSolution(Kind.TSP, np.ones(3), 100.0)
    assert rrtsp_oracle(triangle_tsp, big).feasible


def test_zlb_oracle_requires_zero_lower(diamond):
    with pytest.raises(ValueError):
        rrst_oracle_zlb(diamond, np.zeros(diamond.m), 0.0, 0.1)


def test_general_oracle_refuses_bad_params(diamond):
    with pytest.raises(ValueError, match="convergence"):
        rrst_oracle(diamond, np.full(diamond.m, 0.5), 0.0, preset("paper-optimal"))
    with pytest.raises(ValueError):
        rrst_oracle(diamond, np.full(diamond.m, 0.5), 0.0, derive_constants(16, 2, 4, 0.05))


def _certificate_gap(inst, x, r, a, b):
    D = box_vertices(inst, free_edges(inst))
    return float(np.max(D @ x - a * opt_values(inst, D) - b * r))


@pytest.mark.parametrize("seed", range(4))
def test_steiner_zlb_solve(seed):
    inst = gen_random(seed, 5, 7, zero_lower=True)
    frac = cutting_plane_solve(inst, zlb_oracle(0.05))
    assert frac.r <= min_regret_solution(inst).mr + 1e-6
    assert _certificate_gap(inst, frac.x, frac.r, 1.0, 4.05) <= 1e-6
    assert not separate_steiner_cuts(inst, frac.x).constraint


@pytest.mark.parametrize("seed", range(3))
def test_steiner_general_solve(seed):
    inst = gen_random(seed, 5, 6)
    p = preset("fast")
    frac = cutting_plane_solve(inst, general_oracle(p))
    assert frac.r <= min_regret_solution(inst).mr + 1e-6
    assert _certificate_gap(inst, frac.x, frac.r, p.alpha, p.beta) <= 1e-6
    assert frac.counts().get("regret", 0) >= 0


def test_tsp_solve_small():
    inst = gen_random(1, 5, 7, kind=Kind.TSP)
    frac = cutting_plane_solve(inst, rrtsp_oracle)
    assert frac.r <= min_regret_solution(inst).mr + 1e-6
    assert _certificate_gap(inst, frac.x, frac.r, 2.0, 1.0) <= 1e-6
    assert separate_tsp_constraints(inst, frac.y, frac.flows).feasible
    vals = frac.values()
    assert vals[R] == frac.r
    assert all(0 <= vals[ykey(u, v)] <= 1 + 1e-9 for u, v in frac.y)


def test_tsp_needs_three_vertices():
    inst = make(2, [(0, 1, 0, 1)], range(2), Kind.TSP)
    with pytest.raises(ValueError):
        cutting_plane_solve(inst, rrtsp_oracle)


def test_iteration_cap():
    inst = gen_random(0, 5, 7, zero_lower=True)
    with pytest.raises(CuttingPlaneError, match="convergence"):
        cutting_plane_solve(inst, zlb_oracle(0.05), max_iterations=1)


def test_integral_minimum_regret_point_passes_tsp_oracle():
    inst = gen_random(2, 4, 5, kind=Kind.TSP)
    mrs = min_regret_solution(inst)
    frac = FractionalSolution(Kind.TSP, mrs.mrs.as_array(), mrs.mr)
    # a doubled MST is a feasible adversary, so the regret of the point bounds every row
    assert rrtsp_oracle(inst, frac).feasible
    assert regret_of(inst, mrs.mrs).regret_value == pytest.approx(mrs.mr)


def test_steiner_keys_are_edges(diamond):
    frac = FractionalSolution(Kind.STEINER, np.full(diamond.m, 0.5), 1.0)
    assert set(frac.values()) == {R} | {xkey(e) for e in range(diamond.m)}
    assert isinstance(EdgeMultiset.empty(2), EdgeMultiset)
