"""Exact separation of the cut, degree and flow constraints by minimum cuts."""
from __future__ import annotations

from typing import Iterator, Mapping, Sequence

from ..core import RobustInstance
from ..graphs import global_min_cut, max_flow_min_cut
from .model import FEASIBLE, SeparationResult, fkey, xkey, ykey
from .simplex import LinearConstraint, Provenance, Sense

CUT_TOL = 1e-7


def crossing_edges(inst: RobustInstance, side: frozenset[int]) -> list[int]:
    return [i for i, e in enumerate(inst.edges) if (e.u in side) != (e.v in side)]


def separate_steiner_cuts(inst: RobustInstance, x: Sequence[float]) -> SeparationResult:
    """Cut the first terminal off from another whenever their min cut is below 1."""
    return next(steiner_cut_violations(inst, x), FEASIBLE)


def steiner_cut_violations(inst: RobustInstance, x: Sequence[float]) -> Iterator[SeparationResult]:
    """Every violated root-terminal cut, in terminal order."""
    terms = inst.sorted_terminals
    arcs = [(e.u, e.v, float(x[i])) for i, e in enumerate(inst.edges)]
    root = terms[0]
    for t in terms[1:]:
        value, side = max_flow_min_cut(inst.n, arcs, root, t)
        if value < 1 - CUT_TOL:
            con = LinearConstraint.build({xkey(i): 1.0 for i in crossing_edges(inst, side)}, Sense.GE, 1.0,
                                         Provenance.CUT, side)
            yield SeparationResult(con, 1 - value)


def separate_tsp_constraints(inst: RobustInstance, y: Mapping[tuple[int, int], float],
                             flows: Mapping[tuple[int, int, int], float]) -> SeparationResult:
    """Degree equalities, then y-cuts by global min cut, then per-pair flow cuts."""
    return next(tsp_violations(inst, y, flows), FEASIBLE)


def tsp_violations(inst: RobustInstance, y: Mapping[tuple[int, int], float],
                   flows: Mapping[tuple[int, int, int], float]) -> Iterator[SeparationResult]:
    """All violated degree rows, the global y-cut if violated, and every violated pair flow cut."""
    n = inst.n
    for v in range(n):
        total = sum(y.get((min(u, v), max(u, v)), 0.0) for u in range(n) if u != v)
        if abs(total - 2) > CUT_TOL:
            yield SeparationResult(degree_row(n, v), abs(total - 2))
    value, side = global_min_cut(n, [(u, v, val) for (u, v), val in y.items()])
    if value < 2 - CUT_TOL:
        coeffs = {ykey(u, v): 1.0 for u in side for v in range(n) if v not in side}
        yield SeparationResult(LinearConstraint.build(coeffs, Sense.GE, 2.0, Provenance.CUT, side), 2 - value)
    for u in range(n):
        for v in range(u + 1, n):
            need = y.get((u, v), 0.0)
            if need <= CUT_TOL:
                continue
            arcs = [(e.u, e.v, flows.get((i, u, v), 0.0)) for i, e in enumerate(inst.edges)]
            got, side = max_flow_min_cut(n, arcs, u, v)
            if got < need - CUT_TOL:
                coeffs = {fkey(i, u, v): 1.0 for i in crossing_edges(inst, side)}
                coeffs[ykey(u, v)] = -1.0
                con = LinearConstraint.build(coeffs, Sense.GE, 0.0, Provenance.FLOW, (u, v, side))
                yield SeparationResult(con, need - got)


def degree_row(n: int, v: int) -> LinearConstraint:
    return LinearConstraint.build({ykey(u, v): 1.0 for u in range(n) if u != v}, Sense.EQ, 2.0,
                                  Provenance.DEGREE, v)
