"""Robust rounding of fractional points, plus the 2-approximations it composes with."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import DisconnectedError, EdgeMultiset, Kind, RobustInstance
from .graphs import adjacency, break_cycles, dijkstra, kruskal, path_edges, prune_leaves


@dataclass(frozen=True)
class RoundingParams:
    """gamma: factor of the integral subroutine; delta: integrality gap of the base LP."""

    gamma: float
    delta: float

    def __post_init__(self) -> None:
        if self.gamma < 1 or self.delta < 1:
            raise ValueError("gamma and delta must be at least 1")

    @classmethod
    def for_kind(cls, kind: Kind) -> "RoundingParams":
        return cls(2.0, 1.5) if kind is Kind.TSP else cls(2.0, 2.0)

    def robustness(self, alpha: float, beta: float) -> tuple[float, float]:
        """Constants of the rounded solution given an (alpha, beta)-robust fractional point."""
        gd = self.gamma * self.delta
        return gd * alpha, gd * beta + self.gamma


def mst(inst: RobustInstance, w: Sequence[float]) -> EdgeMultiset:
    tree = kruskal(inst.n, inst.endpoints, w)
    if len(tree) != inst.n - 1:
        raise DisconnectedError("graph is disconnected")
    return EdgeMultiset.from_edges(inst.m, tree)


def double_tree_tsp(inst: RobustInstance, w: Sequence[float]) -> EdgeMultiset:
    """Every MST edge twice: an Eulerian closed walk costing at most twice the optimum."""
    return EdgeMultiset.from_edges(inst.m, mst(inst, w).support, times=2)


def steiner_2approx(inst: RobustInstance, w: Sequence[float], terminals: Iterable[int] | None = None) -> EdgeMultiset:
    """MST of the terminal metric closure, expanded to graph paths, cycles broken and dead ends pruned."""
    w = np.asarray(w, dtype=float)
    terms = sorted(inst.terminals if terminals is None else terminals)
    adj = adjacency(inst)
    preds, dists = {}, np.zeros((len(terms), len(terms)))
    for a, s in enumerate(terms):
        dist, pred = dijkstra(adj, w, s)
        preds[s] = pred
        dists[a] = [dist[t] for t in terms]
    pairs = [(a, b) for a in range(len(terms)) for b in range(a + 1, len(terms))]
    closure = kruskal(len(terms), pairs, [dists[a, b] for a, b in pairs])
    union: set[int] = set()
    for k in closure:
        a, b = pairs[k]
        union.update(path_edges(inst, preds[terms[a]], terms[a], terms[b]))
    forest = break_cycles(inst, union, w)
    return EdgeMultiset.from_edges(inst.m, prune_leaves(inst, forest, set(terms)))


def rounding_weights(inst: RobustInstance, x: Sequence[float], delta: float) -> np.ndarray:
    """max{u (1 - delta x), l (1 - delta x)} + delta l x per edge."""
    x = np.asarray(x, dtype=float)
    if x.shape != (inst.m,):
        raise ValueError("fractional vector has the wrong length")
    lo, hi = inst.lower, inst.upper
    scale = 1 - delta * x
    return np.maximum(hi * scale, lo * scale) + delta * lo * x


def round_robust(inst: RobustInstance, x: Sequence[float], params: RoundingParams | None = None) -> EdgeMultiset:
    """Run the kind's 2-approximation on the rounding weights of ``x``.

    ``x`` is the per-edge fractional value (for TSP the aggregated edge load).
    """
    params = RoundingParams.for_kind(inst.kind) if params is None else params
    w = rounding_weights(inst, x, params.delta)
    if inst.kind is Kind.TSP:
        return double_tree_tsp(inst, w)
    return steiner_2approx(inst, w)
