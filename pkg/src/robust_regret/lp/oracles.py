"""Regret separation oracles.

Each oracle either returns a violated regret row

    sum_e d_e x_e - r <= adv(d)

for one adversary solution ``adv`` at its adversarial realization ``d``, or
reports feasibility, which certifies sum_e d_e x_e <= a*opt(d) + b*r for every
d in the box with the oracle's own (a, b).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..core import EdgeMultiset, Kind, RobustInstance, derived_weights
from ..double_approx import PhaseStats, RobustParams, SwapCache, double_approx_all, maincond_holds
from ..graphs import kruskal
from ..local_search import initial_solution, local_search
from .model import FEASIBLE, R, FractionalSolution, SeparationResult, aggkey, xkey
from .simplex import LinearConstraint, Provenance, Sense

VIOLATION_TOL = 1e-6

RegretOracle = Callable[[RobustInstance, FractionalSolution], SeparationResult]


@dataclass(frozen=True)
class RegretWitness:
    adversary: EdgeMultiset
    realization: np.ndarray


def regret_row(inst: RobustInstance, adversary: EdgeMultiset, d: np.ndarray) -> LinearConstraint:
    """The row sum_e d_e x_e - r <= sum_e d_e adv_e, keyed for the instance kind."""
    key = xkey if inst.kind is Kind.STEINER else aggkey
    coeffs = [(key(e), float(d[e])) for e in range(inst.m)]
    coeffs.append((R, -1.0))
    rhs = float(np.dot(d, adversary.as_array()))
    return LinearConstraint.build(coeffs, Sense.LE, rhs, Provenance.REGRET, RegretWitness(adversary, d))


def _verdict(inst: RobustInstance, x: np.ndarray, r: float, adversary: EdgeMultiset,
             d: np.ndarray) -> SeparationResult:
    excess = float(d @ x - r - d @ adversary.as_array())
    if excess > VIOLATION_TOL:
        return SeparationResult(regret_row(inst, adversary, d), excess)
    return FEASIBLE


def rrtsp_oracle(inst: RobustInstance, frac: FractionalSolution) -> SeparationResult:
    """Doubled-MST adversary on weights u x - l x + 2 l; feasibility certifies (2, 1)."""
    if inst.kind is not Kind.TSP:
        raise ValueError("rrtsp_oracle needs a TSP instance")
    x = np.asarray(frac.x, dtype=float)
    lo, hi = inst.lower, inst.upper
    w = hi * x - lo * x + 2 * lo
    tree = kruskal(inst.n, inst.endpoints, w)
    adv = EdgeMultiset.from_edges(inst.m, tree, times=2)
    d = hi.copy()
    d[tree] = lo[tree]
    return _verdict(inst, x, frac.r, adv, d)


def rrst_oracle_zlb(inst: RobustInstance, x: Sequence[float], r: float, eps: float) -> SeparationResult:
    """Local-search adversary on weights u x; feasibility certifies (1, 4 + eps). Needs every l_e = 0."""
    if inst.kind is not Kind.STEINER:
        raise ValueError("rrst_oracle_zlb needs a Steiner instance")
    if np.any(inst.lower > 0):
        raise ValueError("rrst_oracle_zlb requires every lower bound to be 0")
    x = np.asarray(x, dtype=float)
    w = inst.upper * x
    tree = local_search(inst, w, initial_solution(inst, w), eps)
    d = np.where(tree.as_array() > 0, 0.0, inst.upper)
    return _verdict(inst, x, r, tree, d)


def rrst_oracle(inst: RobustInstance, x: Sequence[float], r: float, params: RobustParams,
                cache: SwapCache | None = None, stats: PhaseStats | None = None) -> SeparationResult:
    """DoubleApprox adversaries over the guess grid; feasibility certifies (alpha, beta).

    Guesses for c'(sol) are tried in increasing order and the first violated row wins.
    """
    if inst.kind is not Kind.STEINER:
        raise ValueError("rrst_oracle needs a Steiner instance")
    if not maincond_holds(params):
        raise ValueError("parameters fail the convergence condition; the (alpha, beta) certificate would not hold")
    x = np.asarray(x, dtype=float)
    c, c2 = derived_weights(inst, x)
    for _, trees in double_approx_all(inst, c, c2, params, cache, stats):
        for tree in trees:
            d = np.where(tree.as_array() > 0, inst.lower, inst.upper)
            res = _verdict(inst, x, r, tree, d)
            if not res.feasible:
                return res
    return FEASIBLE


def zlb_oracle(eps: float) -> RegretOracle:
    def oracle(inst: RobustInstance, frac: FractionalSolution) -> SeparationResult:
        return rrst_oracle_zlb(inst, frac.x, frac.r, eps)

    return oracle


def general_oracle(params: RobustParams, stats: PhaseStats | None = None) -> RegretOracle:
    cache = SwapCache()

    def oracle(inst: RobustInstance, frac: FractionalSolution) -> SeparationResult:
        return rrst_oracle(inst, frac.x, frac.r, params, cache, stats)

    return oracle

