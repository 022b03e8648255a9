"""Two-cost Steiner local search: constrained shortest paths, GreedySwap and
DoubleApprox, plus the constant bundle that governs them.

Trees are handled as frozensets of edge indices internally and as
:class:`EdgeMultiset` at the public boundary.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence

import numpy as np
from scipy.cluster.hierarchy import DisjointSet

from .core import TOL, EdgeMultiset, RobustInstance, is_steiner_tree
from .graphs import adjacency, tree_path
from .local_search import _degrees, apply_swap, cycle_segments, initial_solution, local_search, tree_vertices

LN4 = math.log(4.0)


# ---------------------------------------------------------------------------
# Constants


def zeta_prime(gamma: float, gamma_p: float, eps: float) -> float:
    rg = math.sqrt(gamma_p)
    return 4 * (1 + eps) * gamma_p / ((rg - 1) * (rg - 1 - eps) * (4 * gamma_p - 1) * (4 * gamma - 1))


def progress_terms(gamma: float, gamma_p: float, kappa: float, eps: float) -> tuple[float, float]:
    """(gain, loss) whose difference is the main convergence margin."""
    rg = math.sqrt(gamma)
    gain = min((4 * gamma - 1) / (8 * gamma),
               (4 * gamma - 1) * (rg - 1) * (rg - 1 - eps) * kappa / (16 * (1 + eps) * gamma**2))
    loss = math.exp(zeta_prime(gamma, gamma_p, eps) * (4 * gamma_p + kappa + 1 + eps)) - 1
    return gain, loss


@dataclass(frozen=True)
class RobustParams:
    gamma: float
    gamma_p: float
    kappa: float
    eps: float
    zeta_p: float = field(init=False)
    margin: float = field(init=False)
    eta: float = field(init=False)
    alpha: float = field(init=False)
    beta: float = field(init=False)

    def __post_init__(self) -> None:
        if not self.gamma > 1 or not self.gamma_p > 1:
            raise ValueError("Gamma and Gamma' must exceed 1")
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")
        if not 0 < self.eps < 4 / 35:
            raise ValueError("eps must lie in (0, 4/35)")
        gain, loss = progress_terms(self.gamma, self.gamma_p, self.kappa, self.eps)
        set_ = object.__setattr__
        set_(self, "zeta_p", zeta_prime(self.gamma, self.gamma_p, self.eps))
        set_(self, "margin", gain - loss)
        set_(self, "eta", (gain - loss) / (1 + (4 * self.gamma - 1) / (4 * self.gamma) * loss))
        set_(self, "alpha", (4 * self.gamma_p + self.kappa + 2 + self.eps) * 4 * self.gamma + 1)
        set_(self, "beta", 4 * self.gamma)

    @property
    def forward_cap(self) -> float:
        return 4 * self.gamma_p + self.kappa

    @property
    def cprime_bound(self) -> float:
        return 4 * self.gamma_p + self.kappa + 1 + self.eps

    def theorem_constants(self) -> tuple[float, float]:
        """Composition with a (ln 4 + eps) rounding subroutine: (2 alpha ln4 + eps, 2 beta ln4 + ln4 + eps)."""
        return 2 * self.alpha * LN4 + self.eps, 2 * self.beta * LN4 + LN4 + self.eps


def derive_constants(gamma: float, gamma_p: float, kappa: float, eps: float) -> RobustParams:
    return RobustParams(gamma, gamma_p, kappa, eps)


def maincond_holds(params: RobustParams) -> bool:
    """True when the phase pair provably makes progress.

    Besides the positive margin this needs eps < sqrt(Gamma) - 1, eps < sqrt(Gamma') - 1
    and eps < 2/3 - 5/(12 Gamma); outside that range the margin formula is meaningless.
    """
    p = params
    if p.eps >= math.sqrt(p.gamma) - 1 or p.eps >= math.sqrt(p.gamma_p) - 1:
        return False
    if p.eps >= 2 / 3 - 5 / (12 * p.gamma):
        return False
    return p.margin > 0


PRESETS = {
    "paper-optimal": (9.284, 5.621, 2.241, 0.001),
    "fast": (16.0, 6.0, 4.0, 0.05),
}


def preset(name: str) -> RobustParams:
    try:
        return derive_constants(*PRESETS[name])
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def geometric_grid(lo: float, hi: float, ratio: float) -> list[float]:
    """lo, lo*ratio, ... up to the first value >= hi."""
    if lo <= 0:
        raise ValueError("grid base must be positive")
    k = max(0, math.ceil(math.log(hi / lo) / math.log(ratio) - 1e-12)) if hi > lo else 0
    return [lo * ratio**j for j in range(k + 1)]


# ---------------------------------------------------------------------------
# Constrained shortest paths


class Path(NamedTuple):
    vertices: tuple[int, ...]
    edges: tuple[int, ...]
    w: float
    w2: float


def _shortcut(inst: RobustInstance, s: int, edges: Sequence[int]) -> tuple[tuple[int, ...], tuple[int, ...]]:
    verts = [s]
    es: list[int] = []
    for i in edges:
        x = inst.edges[i].other(verts[-1])
        if x in verts:
            k = verts.index(x)
            del verts[k + 1:]
            del es[k:]
        else:
            verts.append(x)
            es.append(i)
    return tuple(verts), tuple(es)


def pareto_paths(inst: RobustInstance, w: Sequence[float], w2: Sequence[float], source: int,
                 targets: set[int] | frozenset[int], blocked: set[int] | frozenset[int] = frozenset(),
                 blocked_edges: set[int] | frozenset[int] = frozenset(), adj=None) -> dict[int, list[Path]]:
    """Non-dominated (w, w2) simple paths from ``source`` to each target.

    Internal vertices avoid ``blocked`` and the targets themselves. Each list is
    sorted by increasing w (and so decreasing w2); exact ties keep the
    lexicographically first vertex sequence.
    """
    adj = adjacency(inst) if adj is None else adj
    seen: dict[int, list[tuple[float, float]]] = {}
    out: dict[int, list[Path]] = {t: [] for t in targets if t != source}
    heap = [(0.0, 0.0, (source,), ())]
    while heap:
        a, b, verts, edges = heapq.heappop(heap)
        v = verts[-1]
        labels = seen.setdefault(v, [])
        if any(a2 <= a + TOL and b2 <= b + TOL for a2, b2 in labels):
            continue
        labels.append((a, b))
        if v != source and v in out:
            out[v].append(Path(verts, edges, a, b))
            continue
        for x, i in adj[v]:
            if i in blocked_edges or x in verts:
                continue
            if x in blocked and x not in out:
                continue
            heapq.heappush(heap, (a + w[i], b + w2[i], verts + (x,), edges + (i,)))
    return out


def _best_within(front: Sequence[Path], budget: float) -> Path | None:
    for p in front:  # increasing w
        if p.w2 <= budget + TOL:
            return p
    return None


def constrained_shortest_path(inst: RobustInstance, w: Sequence[float], w2: Sequence[float], s: int, t: int,
                              budget: float, eps: float | None, forbidden: Sequence[int] = (),
                              forbidden_edges: Sequence[int] = ()) -> Path | None:
    """Cheapest s-t path under ``w`` whose ``w2``-cost respects ``budget``.

    With ``eps`` set, w2 is rounded down to multiples of eps*budget/n and solved
    by dynamic programming over budget units: the result costs no more than the
    best path with w2 <= budget and has w2 <= (1+eps)*budget. With ``eps`` None
    the answer is exact.
    """
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    forbidden = frozenset(forbidden) - {s, t}
    fedges = frozenset(forbidden_edges)
    w = np.asarray(w, dtype=float)
    w2 = np.asarray(w2, dtype=float)
    if s == t:
        return Path((s,), (), 0.0, 0.0)
    if not eps:
        front = pareto_paths(inst, w, w2, s, {t}, forbidden, fedges)[t]
        return _best_within(front, budget)
    n = inst.n
    if budget == 0:
        K = 0
        units = np.where(w2 <= 0, 0, -1)
    else:
        delta = eps * budget / n
        K = int(math.floor(budget / delta + 1e-9))
        with np.errstate(over="ignore"):  # tiny budgets: anything past K is unusable anyway
            units = np.floor(np.minimum(w2 / delta, K + 1) + 1e-9).astype(np.int64)
    arcs = []
    for i, e in enumerate(inst.edges):
        r = int(units[i])
        if i in fedges or r < 0 or r > K:
            continue
        for a, b in ((e.u, e.v), (e.v, e.u)):
            if b == s or a == t or b in forbidden or a in forbidden:
                continue
            arcs.append((a, b, i, r))
    L = np.full((n, K + 1), np.inf)
    L[s] = 0.0
    pred = np.full((n, K + 1), -1, dtype=np.int64)
    changed = True
    while changed:
        changed = False
        for a, b, i, r in arcs:
            cand = L[a, :K + 1 - r] + w[i]
            dst = L[b, r:]
            better = cand < dst - TOL
            if better.any():
                dst[better] = cand[better]
                pred[b, r:][better] = i
                changed = True
    if not np.isfinite(L[t, K]):
        return None
    edges = []
    v, layer = t, K
    for _ in range(n * (K + 1)):
        if v == s:
            break
        i = int(pred[v, layer])
        edges.append(i)
        layer -= int(units[i])
        v = inst.edges[i].other(v)
    else:
        raise RuntimeError("predecessor walk did not return to the source")
    edges.reverse()
    verts, es = _shortcut(inst, s, edges)
    return Path(verts, es, float(w[list(es)].sum()), float(w2[list(es)].sum()))


# ---------------------------------------------------------------------------
# GreedySwap


class Candidate(NamedTuple):
    dw: float  # w(a) - w(f)
    dw2: float  # w2(f) - w2(a)
    removed: tuple[int, ...]
    added: tuple[int, ...]


class SwapCache:
    """Candidate swaps per (tree, cost pair, budget grid); shared across guesses."""

    def __init__(self) -> None:
        self._store: dict = {}
        self.hits = 0
        self.misses = 0

    def get(self, key, build):
        try:
            val = self._store[key]
            self.hits += 1
            return val
        except KeyError:
            self.misses += 1
            val = self._store[key] = build()
            return val


def budget_grid(chi_p: float, eps: float, n: int, base: float | None = None) -> list[float]:
    """Budgets for GreedySwap: (1+eps)-spaced from (eps/n)*chi' (or ``base``) up to chi'."""
    if chi_p <= 0:
        return [0.0]
    lo = eps / n * chi_p if base is None else min(base, chi_p)
    return geometric_grid(lo, chi_p, 1 + eps)


def swap_candidates(inst: RobustInstance, tree: frozenset[int], w: np.ndarray, w2: np.ndarray,
                    budgets: Sequence[float], eps: float | None = None) -> list[Candidate]:
    """All (a, f) pairs GreedySwap may choose from, before the gain filter.

    For each pair of tree vertices and each budget the path f is the cheapest
    outside path under ``w`` whose ``w2``-cost fits the budget (exact when ``eps``
    is None, otherwise the rounded dynamic program).
    """
    verts = sorted(tree_vertices(inst, tree))
    vset = frozenset(verts)
    adj = adjacency(inst)
    deg = _degrees(inst, tree)
    out: list[Candidate] = []
    seen: set[tuple] = set()
    for s in verts:
        fronts = pareto_paths(inst, w, w2, s, vset, vset, tree, adj) if eps is None else None
        for t in verts:
            if t <= s:
                continue
            paths = []
            for W in budgets:
                if eps is None:
                    p = _best_within(fronts[t], W)
                else:
                    p = constrained_shortest_path(inst, w, w2, s, t, W, eps, forbidden=vset, forbidden_edges=tree)
                if p is not None and p not in paths:
                    paths.append(p)
            if not paths:
                continue
            tp = tree_path(inst, tree, s, t)
            local = dict(deg)
            local[s] = local.get(s, 0) + 1
            local[t] = local.get(t, 0) + 1
            segs = cycle_segments(inst, tp, s, local, inst.terminals)
            for p in paths:
                for seg in segs:
                    key = (tuple(seg), p.edges)
                    if key in seen:
                        continue
                    seen.add(key)
                    out.append(Candidate(float(w[seg].sum()) - p.w, p.w2 - float(w2[seg].sum()),
                                         tuple(seg), p.edges))
    return out


def _pick(cands: Sequence[Candidate], rho_min: float) -> Candidate | None:
    best = None
    for c in cands:
        if c.dw < rho_min - TOL or c.dw <= 0:
            continue
        # c.dw2 / c.dw < best.dw2 / best.dw, both denominators positive
        if best is None or c.dw2 * best.dw < best.dw2 * c.dw:
            best = c
    return best


def greedy_swap(inst: RobustInstance, alg: EdgeMultiset | frozenset[int], w: Sequence[float], w2: Sequence[float],
                chi_p: float, rho_min: float, eps: float, cache: SwapCache | None = None,
                path_eps: float | None = None, budget_base: float | None = None):
    """One GreedySwap step. Returns (tree, stop) with stop = 1 when no swap qualifies.

    The returned tree has the same type as ``alg``.
    """
    as_multiset = isinstance(alg, EdgeMultiset)
    if as_multiset:
        if not is_steiner_tree(inst, alg):
            raise ValueError("alg is not a feasible Steiner tree")
        tree = frozenset(alg.support)
    else:
        tree = alg
    w = np.asarray(w, dtype=float)
    w2 = np.asarray(w2, dtype=float)
    budgets = tuple(budget_grid(chi_p, eps, inst.n, budget_base))

    def build():
        return swap_candidates(inst, tree, w, w2, budgets, path_eps)

    if cache is None:
        cands = build()
    else:
        key = (tree, w.tobytes(), w2.tobytes(), budgets, path_eps)
        cands = cache.get(key, build)
    best = _pick(cands, rho_min)
    if best is None:
        return alg, 1
    new = apply_swap(inst, tree, best.removed, best.added)
    return (EdgeMultiset.from_edges(inst.m, new) if as_multiset else new), 0


# ---------------------------------------------------------------------------
# DoubleApprox


def _cost(w: np.ndarray, tree: frozenset[int]) -> float:
    return float(w[list(tree)].sum()) if tree else 0.0


def round_up(c2: Sequence[float], unit: float) -> np.ndarray:
    c2 = np.asarray(c2, dtype=float)
    return np.ceil(c2 / unit - 1e-9) * unit


@dataclass
class PhaseStats:
    outer_iterations: int = 0
    forward_swaps: int = 0
    backward_swaps: int = 0


def double_approx(inst: RobustInstance, c: Sequence[float], c2: Sequence[float], chi: float, chi_p: float,
                  params: RobustParams, cache: SwapCache | None = None, stats: PhaseStats | None = None,
                  chi_base: float | None = None, path_eps: float | None = None,
                  start: EdgeMultiset | None = None) -> list[EdgeMultiset]:
    """Alternate forward (lower c) and backward (lower c') phases; return every recorded tree.

    ``c2`` must be a multiple of (eps/n)*chi' edgewise when chi' > 0.
    ``chi_base`` is the smallest budget the backward phase considers (defaults to
    (eps/n)*chi). ``start`` replaces the shortest-path tree that local search
    under c' begins from.
    """
    c = np.asarray(c, dtype=float)
    c2 = np.asarray(c2, dtype=float)
    eps = params.eps
    n = inst.n
    cache = SwapCache() if cache is None else cache
    stats = PhaseStats() if stats is None else stats
    if chi_p > 0:
        unit = eps / n * chi_p
        q = c2 / unit
        if np.any(np.abs(q - np.round(q)) > 1e-6 * np.maximum(1.0, np.abs(q))):
            raise ValueError("c' must be a multiple of (eps/n)*chi' on every edge")
    ls_eps = min(eps, (params.gamma_p - 1) / 2)
    if start is None:
        start = initial_solution(inst, c2)
    alg0 = frozenset(local_search(inst, c2, start, ls_eps).support)
    record: list[frozenset[int]] = [alg0]
    positive = c[c > 0]
    if positive.size == 0:
        return [EdgeMultiset.from_edges(inst.m, alg0)]
    cmin = float(positive.min())
    if params.eta > 0:
        cap = 2 * (math.ceil(math.log(n * float(c.max()) / cmin) / math.log(1 + params.eta)) + 1)
    else:
        cap = None
    fwd_cap = params.forward_cap * chi_p
    back_thr = 4 * params.gamma_p * chi_p
    back_rho = eps / n * chi_p if chi_p > 0 else TOL
    back_base = eps / n * chi if chi_base is None else chi_base

    history = [alg0]
    i = 0
    while i == 0 or _cost(c, history[-1]) < _cost(c, history[-2]) - TOL:
        if cap is not None and i >= cap:
            break
        cur = history[-1]
        ccur = _cost(c, cur)
        ends = []
        for rho in geometric_grid(cmin, max(cmin, ccur), 1 + eps):
            a1 = cur
            while _cost(c2, a1) <= fwd_cap + TOL and _cost(c, a1) > ccur - rho / 2 + TOL:
                a1, stop = greedy_swap(inst, a1, c, c2, chi_p, rho / (10 * n * n), eps, cache, path_eps)
                if stop:
                    break
                stats.forward_swaps += 1
            record.append(a1)
            a2 = a1
            while (_cost(c2, a2) >= back_thr - TOL) if chi_p > 0 else (_cost(c2, a2) > TOL):
                a2, stop = greedy_swap(inst, a2, c2, c, chi, back_rho, eps, cache, path_eps, back_base)
                if stop:
                    break
                stats.backward_swaps += 1
            record.append(a2)
            ends.append(a2)
        history.append(min(ends, key=lambda t: _cost(c, t)))
        i += 2
        stats.outer_iterations += 1
    out, seen = [], set()
    for t in record:
        if t not in seen:
            seen.add(t)
            out.append(EdgeMultiset.from_edges(inst.m, t))
    return out


def _zero_cost_tree_exists(inst: RobustInstance, c2: np.ndarray) -> bool:
    ds = DisjointSet(range(inst.n))
    for i, e in enumerate(inst.edges):
        if c2[i] <= TOL:
            ds.merge(e.u, e.v)
    return len({ds[t] for t in inst.terminals}) <= 1


def guess_grid(inst: RobustInstance, weights: np.ndarray, eps: float) -> list[float]:
    """(1+eps)-spaced guesses from the smallest positive weight to the heaviest possible tree."""
    positive = weights[weights > 0]
    if positive.size == 0:
        return []
    top = float(np.sort(weights)[::-1][: max(1, inst.n - 1)].sum())
    return geometric_grid(float(positive.min()), top, 1 + eps)


def double_approx_all(inst: RobustInstance, c: Sequence[float], c2: Sequence[float], params: RobustParams,
                      cache: SwapCache | None = None, stats: PhaseStats | None = None,
                      path_eps: float | None = None) -> Iterator[tuple[float, list[EdgeMultiset]]]:
    """Run DoubleApprox for every guess of c'(sol), smallest first.

    The guess for c(sol) only bounds the budgets of backward-phase paths, so one
    run with the largest guess (and the smallest budget base) covers every guess.
    Yields (chi', trees) per guess.
    """
    # weights within tolerance of zero would otherwise drag the grid bases down by orders of magnitude
    c = np.where(np.asarray(c, dtype=float) <= TOL, 0.0, c)
    c2 = np.where(np.asarray(c2, dtype=float) <= TOL, 0.0, c2)
    eps = params.eps
    cache = SwapCache() if cache is None else cache
    chis = guess_grid(inst, c, eps)
    chi = chis[-1] if chis else 0.0
    chi_base = eps / inst.n * chis[0] if chis else None
    if _zero_cost_tree_exists(inst, c2):
        yield 0.0, double_approx(inst, c, c2, chi, 0.0, params, cache, stats,
                                 chi_base, path_eps)
    for chi_p in guess_grid(inst, c2, eps):
        rounded = round_up(c2, eps / inst.n * chi_p)
        yield chi_p, double_approx(inst, c, rounded, chi, chi_p, params, cache, stats, chi_base, path_eps)
