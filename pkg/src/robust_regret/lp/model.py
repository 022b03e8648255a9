"""LP points, separation verdicts and the variable naming shared by the engine.

Variable keys:

* ``("x", e)``: Steiner edge variable, in [0, 1];
* ``("y", u, v)`` with u < v: TSP pair variable, in [0, 1];
* ``("f", e, u, v)``: TSP flow of pair (u, v) on edge e, in [0, 1];
* ``("X", e)``: aggregate TSP edge load, a shorthand expanded to the sum of
  instantiated flows on e when rows are built;
* ``"r"``: the regret bound.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Hashable

import numpy as np

from ..core import Kind
from .simplex import LinearConstraint

R = "r"


def xkey(e: int) -> tuple:
    return ("x", e)


def ykey(u: int, v: int) -> tuple:
    return ("y", min(u, v), max(u, v))


def fkey(e: int, u: int, v: int) -> tuple:
    return ("f", e, min(u, v), max(u, v))


def aggkey(e: int) -> tuple:
    return ("X", e)


@dataclass(frozen=True)
class SeparationResult:
    constraint: LinearConstraint | None = None
    violation: float = 0.0

    @property
    def feasible(self) -> bool:
        return self.constraint is None


FEASIBLE = SeparationResult()


@dataclass
class FractionalSolution:
    kind: Kind
    x: np.ndarray  # per-edge value; for TSP the aggregated load
    r: float
    y: dict[tuple[int, int], float] | None = None
    flows: dict[tuple[int, int, int], float] | None = None
    constraints: tuple[LinearConstraint, ...] = ()
    iterations: int = 0
    pivots: int = 0
    extra: dict = field(default_factory=dict)

    def values(self) -> dict[Hashable, float]:
        """Every variable (and aggregate) value, keyed as in the LP."""
        vals: dict[Hashable, float] = {R: self.r}
        if self.kind is Kind.STEINER:
            vals.update({xkey(e): float(v) for e, v in enumerate(self.x)})
        else:
            vals.update({aggkey(e): float(v) for e, v in enumerate(self.x)})
            vals.update({ykey(u, v): val for (u, v), val in (self.y or {}).items()})
            vals.update({fkey(e, u, v): val for (e, u, v), val in (self.flows or {}).items()})
        return vals

    def counts(self) -> dict[str, int]:
        c = Counter(con.provenance.value for con in self.constraints)
        return dict(sorted(c.items()))
