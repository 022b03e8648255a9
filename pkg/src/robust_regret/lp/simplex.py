"""Dense two-phase primal simplex with implicit variable bounds.

Pricing is Dantzig's largest reduced cost; after a run of degenerate pivots it
switches to Bland's lowest-index rule until the objective moves again, which
rules out cycling.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

PIVOT_TOL = 1e-9
COST_TOL = 1e-9
FEAS_TOL = 1e-7
MAX_PIVOTS = 1_000_000
DEGENERATE_RUN = 20


class Sense(enum.Enum):
    LE = "<="
    GE = ">="
    EQ = "="


class Provenance(enum.Enum):
    CUT = "cut"
    DEGREE = "degree"
    FLOW = "flow"
    BOX = "box"
    REGRET = "regret"


@dataclass(frozen=True)
class LinearConstraint:
    coefficients: tuple[tuple[Hashable, float], ...]
    sense: Sense
    rhs: float
    provenance: Provenance
    witness: object = field(default=None, compare=False)

    @classmethod
    def build(cls, coeffs: Mapping[Hashable, float] | Iterable[tuple[Hashable, float]], sense: Sense, rhs: float,
              provenance: Provenance, witness: object = None) -> "LinearConstraint":
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        merged: dict[Hashable, float] = {}
        for k, v in items:
            merged[k] = merged.get(k, 0.0) + float(v)
        clean = tuple((k, v) for k, v in merged.items() if v != 0.0)
        if not all(np.isfinite(v) for _, v in clean) or not np.isfinite(rhs):
            raise ValueError("constraint coefficients must be finite")
        return cls(clean, sense, float(rhs), provenance, witness)

    def activity(self, values: Mapping[Hashable, float]) -> float:
        return sum(v * values.get(k, 0.0) for k, v in self.coefficients)

    def violation(self, values: Mapping[Hashable, float]) -> float:
        """Positive when the point breaks the constraint."""
        lhs = self.activity(values)
        if self.sense is Sense.LE:
            return lhs - self.rhs
        if self.sense is Sense.GE:
            return self.rhs - lhs
        return abs(lhs - self.rhs)


class LPStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class PivotLimitError(RuntimeError):
    pass


@dataclass
class LPResult:
    status: LPStatus
    x: np.ndarray
    objective: float
    pivots: int


class _Tableau:
    def __init__(self, A: np.ndarray, b: np.ndarray, ub: np.ndarray, basis: list[int]):
        self.T = A.copy()
        self.beta = b.copy()
        self.ub = ub
        self.basis = basis
        self.at_upper = np.zeros(A.shape[1], dtype=bool)
        self.is_basic = np.zeros(A.shape[1], dtype=bool)
        self.is_basic[basis] = True
        self.pivots = 0

    def pivot(self, r: int, j: int) -> None:
        T = self.T
        T[r] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        rows = np.flatnonzero(col)
        if rows.size:
            block = T[rows] - col[rows, None] * T[r]
            block[np.abs(block) < 1e-13] = 0.0
            T[rows] = block
        self.is_basic[self.basis[r]] = False
        self.basis[r] = j
        self.is_basic[j] = True
        self.at_upper[j] = False

    def run(self, cost: np.ndarray, allowed: np.ndarray, max_pivots: int) -> LPStatus:
        """Dantzig pricing, falling back to Bland's rule while pivots stay degenerate."""
        T, ub = self.T, self.ub
        stalled = 0
        while True:
            if self.pivots >= max_pivots:
                raise PivotLimitError(f"simplex exceeded {max_pivots} pivots")
            d = cost - cost[self.basis] @ T
            cand = allowed & ~self.is_basic & (((d < -COST_TOL) & ~self.at_upper & (ub > 0)) | ((d > COST_TOL) & self.at_upper))
            idx = np.flatnonzero(cand)
            if idx.size == 0:
                return LPStatus.OPTIMAL
            if stalled >= DEGENERATE_RUN:
                j = int(idx[0])  # Bland: lowest index
            else:
                j = int(idx[np.argmax(np.abs(d[idx]))])
            sgn = -1.0 if self.at_upper[j] else 1.0
            col = sgn * T[:, j]
            ubB = ub[self.basis]
            limits = np.full(len(col), np.inf)
            down = col > PIVOT_TOL
            limits[down] = np.maximum(self.beta[down], 0.0) / col[down]
            up = (col < -PIVOT_TOL) & np.isfinite(ubB)
            limits[up] = np.maximum(ubB[up] - self.beta[up], 0.0) / -col[up]
            tmin = limits.min() if limits.size else np.inf
            self.pivots += 1
            stalled = stalled + 1 if min(tmin, ub[j]) <= 1e-12 else 0
            if ub[j] <= tmin:
                if not np.isfinite(ub[j]):
                    return LPStatus.UNBOUNDED
                self.beta -= col * ub[j]
                self.at_upper[j] = not self.at_upper[j]
                continue
            ties = np.flatnonzero(limits <= tmin + 1e-12)
            r = int(min(ties, key=lambda i: self.basis[i]))
            leave = self.basis[r]
            leave_upper = bool(up[r] and not down[r])
            entering_value = tmin if sgn > 0 else ub[j] - tmin
            self.beta -= col * tmin
            self.pivot(r, j)
            self.beta[r] = entering_value
            self.at_upper[leave] = leave_upper

    def values(self, n: int) -> np.ndarray:
        x = np.where(self.at_upper, self.ub, 0.0)
        x[self.basis] = self.beta
        return x[:n]


def solve_standard(A: np.ndarray, senses: Sequence[Sense], b: np.ndarray, c: np.ndarray, ub: np.ndarray,
                   max_pivots: int = MAX_PIVOTS) -> LPResult:
    """Minimize c x subject to A_i x (sense_i) b_i and 0 <= x <= ub."""
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float).reshape(len(senses), len(c))
    b = np.asarray(b, dtype=float).copy()
    ub = np.asarray(ub, dtype=float)
    m, n = A.shape
    if np.any(ub < 0):
        return LPResult(LPStatus.INFEASIBLE, np.zeros(n), np.inf, 0)
    slack_rows = [i for i, s in enumerate(senses) if s is not Sense.EQ]
    S = np.zeros((m, len(slack_rows)))
    for k, i in enumerate(slack_rows):
        S[i, k] = 1.0 if senses[i] is Sense.LE else -1.0
    ext = np.hstack([A, S])
    flip = b < 0
    ext[flip] *= -1
    b[flip] *= -1
    full = np.hstack([ext, np.eye(m)])
    n_ext = ext.shape[1]
    ubs = np.concatenate([ub, np.full(len(slack_rows), np.inf), np.full(m, np.inf)])
    tab = _Tableau(full, b, ubs, list(range(n_ext, n_ext + m)))
    allowed = np.ones(full.shape[1], dtype=bool)
    phase1 = np.concatenate([np.zeros(n_ext), np.ones(m)])
    tab.run(phase1, allowed, max_pivots)
    infeas = float(phase1 @ np.where(tab.at_upper, ubs, 0.0) + phase1[tab.basis] @ tab.beta)
    if infeas > FEAS_TOL * max(1.0, float(np.abs(b).max(initial=0.0))):
        return LPResult(LPStatus.INFEASIBLE, tab.values(n), np.inf, tab.pivots)
    for r in range(m):
        if tab.basis[r] >= n_ext:
            row = np.abs(tab.T[r, :n_ext])
            row[tab.is_basic[:n_ext]] = 0.0
            js = np.flatnonzero(row > PIVOT_TOL)
            if js.size:
                j = int(js[0])
                value = ubs[j] if tab.at_upper[j] else 0.0
                tab.pivot(r, j)
                tab.beta[r] = value
    ubs[n_ext:] = 0.0
    allowed[n_ext:] = False
    cost = np.concatenate([c, np.zeros(full.shape[1] - n)])
    status = tab.run(cost, allowed, max_pivots)
    if status is LPStatus.UNBOUNDED:
        return LPResult(status, tab.values(n), -np.inf, tab.pivots)
    x = _polish(full, b, ubs, tab)
    return LPResult(LPStatus.OPTIMAL, x[:n], float(c @ x[:n]), tab.pivots)


def _polish(full: np.ndarray, b: np.ndarray, ubs: np.ndarray, tab: _Tableau) -> np.ndarray:
    """Recompute basic values from the original rows to shed accumulated pivot error."""
    x = np.where(tab.at_upper, ubs, 0.0)
    nonbasic = ~tab.is_basic
    rhs = b - full[:, nonbasic] @ x[nonbasic]
    B = full[:, tab.basis]
    try:
        xb = np.linalg.solve(B, rhs)
    except np.linalg.LinAlgError:
        xb = tab.beta
    if not np.all(np.isfinite(xb)) or np.abs(xb - tab.beta).max(initial=0.0) > 1e-6:
        xb = tab.beta
    x[tab.basis] = xb
    return np.clip(x, 0.0, ubs)


def simplex_solve(constraints: Sequence[LinearConstraint], objective: Mapping[Hashable, float],
                  upper: Mapping[Hashable, float] | None = None, variables: Sequence[Hashable] | None = None,
                  max_pivots: int = MAX_PIVOTS) -> tuple[LPResult, dict[Hashable, float]]:
    """Minimize ``objective`` over nonnegative variables with optional upper bounds.

    Variables are ordered as given, else by first appearance in the objective and
    then in the constraints; the order fixes Bland's rule and so the result.
    """
    upper = upper or {}
    if variables is None:
        order: dict[Hashable, None] = dict.fromkeys(objective)
        for con in constraints:
            for k, _ in con.coefficients:
                order.setdefault(k, None)
        variables = list(order)
    pos = {v: i for i, v in enumerate(variables)}
    A = np.zeros((len(constraints), len(variables)))
    for r, con in enumerate(constraints):
        for k, v in con.coefficients:
            A[r, pos[k]] += v
    b = np.array([con.rhs for con in constraints])
    c = np.zeros(len(variables))
    for k, v in objective.items():
        c[pos[k]] = v
    ub = np.array([upper.get(v, np.inf) for v in variables], dtype=float)
    res = solve_standard(A, [con.sense for con in constraints], b, c, ub, max_pivots)
    return res, dict(zip(variables, res.x.tolist()))
