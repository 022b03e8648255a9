"""Constraint generation for the robust Steiner and TSP relaxations."""
from __future__ import annotations

from typing import Hashable

import numpy as np

from ..core import Kind, RobustInstance
from .model import R, FractionalSolution, aggkey, fkey, xkey, ykey
from .oracles import RegretOracle
from .separation import degree_row, steiner_cut_violations, tsp_violations
from .simplex import LinearConstraint, LPStatus, Provenance, Sense, simplex_solve


class CuttingPlaneError(RuntimeError):
    pass


class _Problem:
    """Working set of rows plus lazily instantiated TSP flow variables."""

    def __init__(self, inst: RobustInstance):
        self.inst = inst
        self.rows: list[LinearConstraint] = []
        self.keys: set[tuple] = set()
        self.pairs: list[tuple[int, int]] = []
        n = inst.n
        if inst.kind is Kind.STEINER:
            self.base = [R] + [xkey(e) for e in range(inst.m)]
        else:
            self.base = [R] + [ykey(u, v) for u in range(n) for v in range(u + 1, n)]
            for v in range(n):
                self.add(degree_row(n, v))
            for e in range(inst.m):
                self.add(LinearConstraint.build({aggkey(e): 1.0}, Sense.LE, 2.0, Provenance.BOX, e))

    def has(self, con: LinearConstraint) -> bool:
        return (con.coefficients, con.sense, con.rhs) in self.keys

    def add(self, con: LinearConstraint) -> None:
        key = (con.coefficients, con.sense, con.rhs)
        if key in self.keys:
            raise CuttingPlaneError(f"separation repeated a {con.provenance.value} constraint")
        self.keys.add(key)
        self.rows.append(con)
        if con.provenance is Provenance.FLOW:
            u, v, _ = con.witness
            if (u, v) not in self.pairs:
                self.pairs.append((u, v))

    def variables(self) -> list[Hashable]:
        out = list(self.base)
        for u, v in self.pairs:
            out.extend(fkey(e, u, v) for e in range(self.inst.m))
        return out

    def expanded(self) -> list[LinearConstraint]:
        """Rows with each aggregate load replaced by its instantiated flows."""
        out = []
        for con in self.rows:
            if not any(isinstance(k, tuple) and k[0] == "X" for k, _ in con.coefficients):
                out.append(con)
                continue
            coeffs = []
            for k, v in con.coefficients:
                if isinstance(k, tuple) and k[0] == "X":
                    coeffs.extend((fkey(k[1], a, b), v) for a, b in self.pairs)
                else:
                    coeffs.append((k, v))
            out.append(LinearConstraint(tuple(coeffs), con.sense, con.rhs, con.provenance, con.witness))
        return out

    def point(self, vals: dict, iterations: int, pivots: int) -> FractionalSolution:
        inst = self.inst
        r = max(0.0, vals[R])
        if inst.kind is Kind.STEINER:
            x = np.array([vals[xkey(e)] for e in range(inst.m)])
            return FractionalSolution(Kind.STEINER, x, r, constraints=tuple(self.rows), iterations=iterations,
                                      pivots=pivots)
        n = inst.n
        y = {(u, v): vals[ykey(u, v)] for u in range(n) for v in range(u + 1, n)}
        flows = {(e, u, v): vals[fkey(e, u, v)] for u, v in self.pairs for e in range(inst.m)}
        x = np.zeros(inst.m)
        for (e, _, _), val in flows.items():
            x[e] += val
        return FractionalSolution(Kind.TSP, x, r, y, flows, tuple(self.rows), iterations, pivots)


def cutting_plane_solve(inst: RobustInstance, regret_oracle: RegretOracle,
                        max_iterations: int | None = None) -> FractionalSolution:
    """Minimize r over the working set, adding violated rows until both separators agree.

    Standard rows (cuts, degrees, flows) are separated exactly first, every
    violated one in a round being added at once; only a point passing them all is
    shown to ``regret_oracle``.
    """
    if inst.kind is Kind.TSP and inst.n < 3:
        raise ValueError("the TSP relaxation needs at least three vertices")
    cap = 10 * inst.m * inst.n if max_iterations is None else max_iterations
    prob = _Problem(inst)
    upper = {k: 1.0 for k in prob.base if k != R}
    pivots = 0
    for it in range(1, cap + 1):
        variables = prob.variables()
        for k in variables[len(prob.base):]:
            upper[k] = 1.0
        res, vals = simplex_solve(prob.expanded(), {R: 1.0}, upper, variables)
        pivots += res.pivots
        if res.status is not LPStatus.OPTIMAL:
            raise CuttingPlaneError(f"restricted LP is {res.status.value}; the relaxation always contains the "
                                    "minimum-regret solution, so this indicates a bug")
        frac = prob.point(vals, it, pivots)
        if inst.kind is Kind.STEINER:
            found = list(steiner_cut_violations(inst, frac.x))
        else:
            found = list(tsp_violations(inst, frac.y, frac.flows))
        if not found:
            sep = regret_oracle(inst, frac)
            if sep.feasible:
                return frac
            found = [sep]
        for sep in found:
            if not prob.has(sep.constraint):
                prob.add(sep.constraint)
    raise CuttingPlaneError(f"no convergence within {cap} iterations")
