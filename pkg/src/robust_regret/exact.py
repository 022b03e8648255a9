"""Exact reference oracles for small instances.

``opt`` uses Dreyfus-Wagner (Steiner) or Held-Karp on the metric closure (TSP).
Regret is computed by sweeping box vertices, optionally cross-checked against an
enumeration of adversary trees. Every enumeration has a hard cap; exceeding it
raises :class:`CapExceeded` instead of returning an approximate answer.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .core import (
    TOL,
    EdgeMultiset,
    Kind,
    RobustInstance,
    _connected,
    require_feasible,
)
from .graphs import INF, adjacency, dijkstra, floyd_warshall_batch, kruskal, path_edges, prune_leaves

TERMINAL_CAP = 12  # Dreyfus-Wagner terminals / Held-Karp vertices
VERTEX_SWEEP_CAP = 20  # free coordinates in a box-vertex sweep
STEINER_ENUM_CAP = 22  # edges for exhaustive tree enumeration
TSP_ENUM_CAP = 13  # edges for exhaustive multiset enumeration (3^m candidates)
_CHUNK = 1 << 14


class CapExceeded(RuntimeError):
    """An exact oracle was asked to work beyond its documented size cap."""


@dataclass(frozen=True)
class RegretReport:
    regret_value: float
    witness_realization: np.ndarray
    witness_adversary: EdgeMultiset


@dataclass(frozen=True)
class MrsReport:
    mrs: EdgeMultiset
    mr: float


# ---------------------------------------------------------------------------
# Batched optimum values


def _steiner_batch(inst: RobustInstance, dist: np.ndarray) -> np.ndarray:
    terms = inst.sorted_terminals
    if len(terms) > TERMINAL_CAP:
        raise CapExceeded(f"{len(terms)} terminals exceeds the Dreyfus-Wagner cap of {TERMINAL_CAP}")
    R = dist.shape[0]
    if len(terms) == 1:
        return np.zeros(R)
    root, rest = terms[0], terms[1:]
    k = len(rest)
    dp: list[np.ndarray | None] = [None] * (1 << k)
    for j, t in enumerate(rest):
        dp[1 << j] = dist[:, t, :]
    for S in range(1, 1 << k):
        if S & (S - 1) == 0:
            continue
        low = S & -S
        g = np.full((R, inst.n), INF)
        sub = (S - 1) & S
        while sub:
            if sub & low:
                np.minimum(g, dp[sub] + dp[S ^ sub], out=g)
            sub = (sub - 1) & S
        dp[S] = np.min(dist + g[:, None, :], axis=2)
    return dp[(1 << k) - 1][:, root].copy()


def _held_karp_tables(dist: np.ndarray) -> list[np.ndarray]:
    """dp[S][:, j] = cheapest path from vertex 0 through S ending at vertex j+1."""
    R, n, _ = dist.shape
    k = n - 1
    dp: list[np.ndarray] = [None] * (1 << k)  # type: ignore[list-item]
    inner = dist[:, 1:, 1:]
    for S in range(1, 1 << k):
        cur = np.full((R, k), INF)
        if S & (S - 1) == 0:
            j = S.bit_length() - 1
            cur[:, j] = dist[:, 0, j + 1]
        else:
            for j in range(k):
                if S >> j & 1:
                    prev = dp[S ^ (1 << j)]
                    cur[:, j] = np.min(prev + inner[:, :, j], axis=1)
        dp[S] = cur
    return dp


def _tsp_batch(inst: RobustInstance, dist: np.ndarray) -> np.ndarray:
    n = inst.n
    if n > TERMINAL_CAP:
        raise CapExceeded(f"{n} vertices exceeds the Held-Karp cap of {TERMINAL_CAP}")
    if n == 1:
        return np.zeros(dist.shape[0])
    dp = _held_karp_tables(dist)
    full = dp[-1]
    return np.min(full + dist[:, 1:, 0], axis=1)


def opt_values(inst: RobustInstance, D: np.ndarray) -> np.ndarray:
    """opt(d) for every row d of ``D`` (shape (R, m))."""
    D = np.atleast_2d(np.asarray(D, dtype=float))
    out = np.empty(D.shape[0])
    for lo in range(0, D.shape[0], _CHUNK):
        block = D[lo:lo + _CHUNK]
        dist = floyd_warshall_batch(inst.n, inst.endpoints, block)
        if inst.kind is Kind.TSP:
            out[lo:lo + _CHUNK] = _tsp_batch(inst, dist)
        else:
            out[lo:lo + _CHUNK] = _steiner_batch(inst, dist)
    return out


# ---------------------------------------------------------------------------
# Optimum with a witness solution


def _shortest_paths(inst: RobustInstance, d: Sequence[float]):
    adj = adjacency(inst)
    dist = np.empty((inst.n, inst.n))
    preds = []
    for s in range(inst.n):
        ds, ps = dijkstra(adj, d, s)
        dist[s] = ds
        preds.append(ps)
    return dist, preds


def opt_steiner(inst: RobustInstance, d: Sequence[float]) -> tuple[float, EdgeMultiset]:
    """Dreyfus-Wagner with reconstruction of an optimal tree."""
    d = np.asarray(d, dtype=float)
    terms = inst.sorted_terminals
    if len(terms) > TERMINAL_CAP:
        raise CapExceeded(f"{len(terms)} terminals exceeds the Dreyfus-Wagner cap of {TERMINAL_CAP}")
    if len(terms) == 1:
        return 0.0, EdgeMultiset.empty(inst.m)
    dist, preds = _shortest_paths(inst, d)
    n = inst.n
    root, rest = terms[0], terms[1:]
    k = len(rest)
    dp = np.full((1 << k, n), INF)
    split = np.zeros((1 << k, n), dtype=np.int64)  # subset used at vertex u (g step)
    hop = np.zeros((1 << k, n), dtype=np.int64)  # vertex u joined to v by a shortest path
    gval = np.full((1 << k, n), INF)
    for j, t in enumerate(rest):
        dp[1 << j] = dist[t]
        hop[1 << j] = t
    for S in range(1, 1 << k):
        if S & (S - 1) == 0:
            continue
        low = S & -S
        sub = (S - 1) & S
        while sub:
            if sub & low:
                cand = dp[sub] + dp[S ^ sub]
                better = cand < gval[S] - TOL
                gval[S] = np.where(better, cand, gval[S])
                split[S] = np.where(better, sub, split[S])
            sub = (sub - 1) & S
        tot = dist + gval[S][None, :]
        hop[S] = np.argmin(tot, axis=1)
        dp[S] = tot[np.arange(n), hop[S]]
    chosen: set[int] = set()

    def build(S: int, v: int) -> None:
        u = int(hop[S][v])
        if u != v:
            chosen.update(path_edges(inst, preds[u], u, v))
        if S & (S - 1) == 0:
            return
        a = int(split[S][u])
        build(a, u)
        build(S ^ a, u)

    build((1 << k) - 1, root)
    # The union of the pieces costs at most the optimum, so any spanning tree of it is optimal.
    tree = kruskal(n, inst.endpoints, d, candidates=sorted(chosen))
    tree = prune_leaves(inst, tree, inst.terminals)
    sol = EdgeMultiset.from_edges(inst.m, tree)
    return float(d[list(tree)].sum()) if tree else 0.0, sol


def opt_tsp(inst: RobustInstance, d: Sequence[float]) -> tuple[float, EdgeMultiset]:
    """Held-Karp on the metric closure, expanded back to graph edges."""
    d = np.asarray(d, dtype=float)
    n = inst.n
    if n > TERMINAL_CAP:
        raise CapExceeded(f"{n} vertices exceeds the Held-Karp cap of {TERMINAL_CAP}")
    if n == 1:
        return 0.0, EdgeMultiset.empty(inst.m)
    dist, preds = _shortest_paths(inst, d)
    dp = _held_karp_tables(dist[None])
    k = n - 1
    full = (1 << k) - 1
    last = dp[full][0] + dist[1:, 0]
    j = int(np.argmin(last))
    order = [j + 1]
    S = full
    while S & (S - 1):
        prev = S ^ (1 << j)
        cand = dp[prev][0] + dist[1:, j + 1]
        j = int(np.argmin(cand))
        order.append(j + 1)
        S = prev
    order.append(0)
    order.reverse()  # 0, v1, ..., v_{n-1}
    tour = order + [0]
    mult = [0] * inst.m
    for a, b in zip(tour, tour[1:]):
        for i in path_edges(inst, preds[a], a, b):
            mult[i] += 1
    mult = [k_ - 2 * ((k_ - 1) // 2) if k_ > 2 else k_ for k_ in mult]
    sol = EdgeMultiset(tuple(mult))
    return float(np.dot(mult, d)), sol


def opt(inst: RobustInstance, d: Sequence[float]) -> tuple[float, EdgeMultiset]:
    if inst.kind is Kind.TSP:
        return opt_tsp(inst, d)
    return opt_steiner(inst, d)


# ---------------------------------------------------------------------------
# Enumeration


def free_edges(inst: RobustInstance) -> list[int]:
    """Edges whose interval is not a single point."""
    return [i for i, e in enumerate(inst.edges) if e.upper > e.lower]


def box_vertices(inst: RobustInstance, free: Sequence[int]) -> np.ndarray:
    """All box vertices varying only the ``free`` coordinates; row r sets bit j of r -> upper."""
    k = len(free)
    if k > VERTEX_SWEEP_CAP:
        raise CapExceeded(f"{k} uncertain edges exceeds the sweep cap of {VERTEX_SWEEP_CAP}")
    R = 1 << k
    D = np.tile(np.asarray(inst.lower, dtype=float), (R, 1))
    bits = (np.arange(R)[:, None] >> np.arange(k)[None, :]) & 1
    if k:
        D[:, list(free)] = np.where(bits == 1, inst.upper[list(free)], inst.lower[list(free)])
    return D


def enumerate_steiner_trees(inst: RobustInstance, minimal: bool = True) -> Iterator[EdgeMultiset]:
    """Every edge set forming a tree that spans the terminals.

    With ``minimal`` only trees whose leaves are all terminals are produced.
    """
    if inst.m > STEINER_ENUM_CAP:
        raise CapExceeded(f"{inst.m} edges exceeds the tree enumeration cap of {STEINER_ENUM_CAP}")
    terms = inst.terminals
    ends = [(e.u, e.v) for e in inst.edges]
    for size in range(len(terms) - 1, inst.n):
        for combo in itertools.combinations(range(inst.m), size):
            verts = set(terms)
            deg: dict[int, int] = {}
            for i in combo:
                u, v = ends[i]
                verts.add(u)
                verts.add(v)
                deg[u] = deg.get(u, 0) + 1
                deg[v] = deg.get(v, 0) + 1
            if len(verts) != size + 1:
                continue
            if minimal and any(c == 1 and v not in terms for v, c in deg.items()):
                continue
            index = {v: j for j, v in enumerate(verts)}
            if _connected(len(verts), ((index[ends[i][0]], index[ends[i][1]]) for i in combo)):
                yield EdgeMultiset.from_edges(inst.m, combo)


def enumerate_tsp_multisets(inst: RobustInstance) -> np.ndarray:
    """Matrix of every feasible multiplicity vector (entries in {0,1,2}), lexicographic order."""
    m = inst.m
    if m > TSP_ENUM_CAP:
        raise CapExceeded(f"{m} edges exceeds the multiset enumeration cap of {TSP_ENUM_CAP}")
    codes = np.arange(3 ** m, dtype=np.int64)
    powers = 3 ** np.arange(m - 1, -1, -1, dtype=np.int64)
    M = ((codes[:, None] // powers[None, :]) % 3).astype(np.int8)
    inc = np.zeros((m, inst.n), dtype=np.int8)
    for i, e in enumerate(inst.edges):
        inc[i, e.u] = 1
        inc[i, e.v] = 1
    odd = ((M % 2).astype(np.int32) @ inc.astype(np.int32)) % 2
    M = M[~odd.any(axis=1)]
    ends = [(e.u, e.v) for e in inst.edges]
    keep = [
        inst.n == 1 or _connected(inst.n, (ends[i] for i in np.flatnonzero(row)))
        for row in M
    ]
    return M[np.array(keep, dtype=bool)] if len(M) else M


def feasible_solutions(inst: RobustInstance, minimal: bool = True) -> np.ndarray:
    if inst.kind is Kind.TSP:
        return enumerate_tsp_multisets(inst)
    rows = [s.mult for s in enumerate_steiner_trees(inst, minimal=minimal)]
    return np.array(rows, dtype=np.int8).reshape(-1, inst.m)


# ---------------------------------------------------------------------------
# Regret


def regret_of(inst: RobustInstance, sol: EdgeMultiset, method: str = "vertices",
              full_sweep: bool = False) -> RegretReport:
    """Exact regret max_d sol(d) - opt(d).

    ``method="vertices"`` sweeps box vertices. Coordinates of edges outside the
    solution's support stay at their lower bound unless ``full_sweep`` is set:
    raising them never increases sol(d) - opt(d) because opt is monotone.
    ``method="adversaries"`` (Steiner only) maximizes sol(d) - adv(d) over all
    adversary trees at their adversarial realizations.
    """
    require_feasible(inst, sol)
    s = np.array(sol.mult, dtype=float)
    if method == "adversaries":
        if inst.kind is not Kind.STEINER:
            raise ValueError("adversary enumeration is only available for Steiner instances")
        A = feasible_solutions(inst, minimal=True).astype(float)
        diff = s[None, :] - A
        vals = np.where(diff > 0, diff * inst.upper, diff * inst.lower).sum(axis=1)
        best = int(np.argmax(vals))
        adv = EdgeMultiset(tuple(int(k) for k in A[best]))
        d = np.where(s > A[best], inst.upper, inst.lower)
        return RegretReport(float(vals[best]), d, adv)
    if method != "vertices":
        raise ValueError(f"unknown regret method {method!r}")
    free = free_edges(inst)
    if not full_sweep:
        free = [i for i in free if s[i] > 0]
    D = box_vertices(inst, free)
    vals = D @ s - opt_values(inst, D)
    best = int(np.argmax(vals))
    d = D[best]
    _, adv = opt(inst, d)
    return RegretReport(float(vals[best]), d, adv)


def min_regret_solution(inst: RobustInstance) -> MrsReport:
    """Exhaustive minimum-regret solution; ties go to the lexicographically smallest vector."""
    cands = feasible_solutions(inst, minimal=True)
    if len(cands) == 0:
        raise RuntimeError("no feasible solution enumerated")
    D = box_vertices(inst, free_edges(inst))
    base = opt_values(inst, D)
    regrets = np.empty(len(cands))
    step = max(1, (1 << 22) // max(1, D.shape[0]))
    for lo in range(0, len(cands), step):
        block = cands[lo:lo + step].astype(float)
        regrets[lo:lo + step] = np.max(block @ D.T - base[None, :], axis=1)
    mr = float(regrets.min())
    ties = np.flatnonzero(regrets <= mr + TOL)
    rows = [tuple(int(k) for k in cands[i]) for i in ties]
    return MrsReport(EdgeMultiset(min(rows)), mr)


def max_excess(inst: RobustInstance, vec: Sequence[float], alpha: float = 1.0) -> tuple[float, np.ndarray]:
    """max over the box of sum_e d_e vec_e - alpha * opt(d), with a maximizing vertex.

    The objective is convex in d, so a vertex attains it; coordinates with
    vec_e = 0 stay at the lower bound because opt is monotone in d.
    """
    v = np.asarray(vec, dtype=float)
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    free = [i for i in free_edges(inst) if v[i] > 0]
    D = box_vertices(inst, free)
    vals = D @ v - alpha * opt_values(inst, D)
    best = int(np.argmax(vals))
    return float(vals[best]), D[best]
