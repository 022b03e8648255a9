"""Path-swap local search for Steiner trees.

A swap adds a path ``f`` between two tree vertices whose internal vertices lie
outside the tree, and removes a maximal segment ``a`` of the tree path between
the same two vertices. Segments end at vertices of degree >= 3 in tree + f and at
terminals, so removing one never disconnects a terminal.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import TOL, EdgeMultiset, Kind, RobustInstance, is_steiner_tree
from .graphs import adjacency, break_cycles, dijkstra, path_edges, prune_leaves, tree_path


@dataclass(frozen=True)
class SwapMove:
    added_path: tuple[int, ...]  # vertex sequence of f
    added_edges: tuple[int, ...]
    removed: tuple[int, ...]  # edge indices of a
    gain: float


def _check_tree(inst: RobustInstance, tree: EdgeMultiset) -> None:
    if inst.kind is not Kind.STEINER:
        raise ValueError("local search works on Steiner instances")
    if not is_steiner_tree(inst, tree):
        raise ValueError("start is not a feasible Steiner tree")


def tree_vertices(inst: RobustInstance, edges: Iterable[int]) -> set[int]:
    verts = set(inst.terminals)
    for i in edges:
        verts.add(inst.edges[i].u)
        verts.add(inst.edges[i].v)
    return verts


def outside_paths(inst: RobustInstance, adj, w: Sequence[float], tree_edges: frozenset[int],
                  in_tree: Sequence[bool], source: int) -> dict[int, tuple[float, tuple[int, ...], tuple[int, ...]]]:
    """Shortest paths from ``source`` to other tree vertices avoiding tree vertices inside.

    Ties are broken by the vertex sequence, then the edge sequence.
    """
    best: dict[int, tuple] = {}
    found: dict[int, tuple] = {}
    heap = [(0.0, (source,), ())]
    while heap:
        dist, verts, edges = heapq.heappop(heap)
        v = verts[-1]
        if v in best:
            continue
        best[v] = (dist, verts, edges)
        if v != source and in_tree[v]:
            found[v] = (dist, verts, edges)
            continue
        for x, i in adj[v]:
            if i in tree_edges or x in best or x == source:
                continue
            heapq.heappush(heap, (dist + w[i], verts + (x,), edges + (i,)))
    return found


def cycle_segments(inst: RobustInstance, path: Sequence[int], s: int, deg: dict[int, int],
                   split_extra: frozenset[int]) -> list[list[int]]:
    """Cut a tree path (edge list starting at ``s``) at high-degree or protected vertices."""
    segments: list[list[int]] = []
    cur: list[int] = []
    v = s
    for k, i in enumerate(path):
        cur.append(i)
        v = inst.edges[i].other(v)
        if k == len(path) - 1 or deg.get(v, 0) >= 3 or v in split_extra:
            segments.append(cur)
            cur = []
    return segments


def _degrees(inst: RobustInstance, edges: Iterable[int]) -> dict[int, int]:
    deg: dict[int, int] = {}
    for i in edges:
        e = inst.edges[i]
        deg[e.u] = deg.get(e.u, 0) + 1
        deg[e.v] = deg.get(e.v, 0) + 1
    return deg


def apply_swap(inst: RobustInstance, tree_edges: Iterable[int], removed: Iterable[int],
               added: Iterable[int]) -> frozenset[int]:
    edges = (set(tree_edges) - set(removed)) | set(added)
    return frozenset(prune_leaves(inst, edges, inst.terminals))


def enumerate_swaps(inst: RobustInstance, w: Sequence[float], tree: EdgeMultiset,
                    verify: bool = True) -> list[SwapMove]:
    _check_tree(inst, tree)
    w = np.asarray(w, dtype=float)
    tedges = frozenset(tree.support)
    verts = sorted(tree_vertices(inst, tedges))
    in_tree = [False] * inst.n
    for v in verts:
        in_tree[v] = True
    adj = adjacency(inst)
    deg = _degrees(inst, tedges)
    moves = []
    for s in verts:
        paths = outside_paths(inst, adj, w, tedges, in_tree, s)
        for t in verts:
            if t <= s or t not in paths:
                continue
            flen, fverts, fedges = paths[t]
            tp = tree_path(inst, tedges, s, t)
            local = dict(deg)
            local[s] = local.get(s, 0) + 1
            local[t] = local.get(t, 0) + 1
            for seg in cycle_segments(inst, tp, s, local, inst.terminals):
                gain = float(w[seg].sum() - flen)
                if verify:
                    after = apply_swap(inst, tedges, seg, fedges)
                    if not is_steiner_tree(inst, EdgeMultiset.from_edges(inst.m, after)):
                        raise AssertionError("swap would break feasibility")
                moves.append(SwapMove(fverts, fedges, tuple(seg), gain))
    return moves


def local_search(inst: RobustInstance, w: Sequence[float], start: EdgeMultiset, eps: float) -> EdgeMultiset:
    """Apply the largest-gain swap with gain >= (eps/4) w(a) until none is left."""
    _check_tree(inst, start)
    if eps <= 0:
        raise ValueError("eps must be positive")
    w = np.asarray(w, dtype=float)
    cur = apply_swap(inst, start.support, (), ())
    positive = w[w > 0]
    if positive.size == 0:
        return EdgeMultiset.from_edges(inst.m, cur)
    # every accepted swap lowers the cost by at least (eps/4) * min positive weight
    budget = math.ceil(float(w[list(cur)].sum()) / (eps / 4 * positive.min())) + 1
    for _ in range(budget + 1):
        tree = EdgeMultiset.from_edges(inst.m, cur)
        best = None
        for mv in enumerate_swaps(inst, w, tree, verify=False):
            wa = float(w[list(mv.removed)].sum())
            if mv.gain > TOL and mv.gain >= eps / 4 * wa and (best is None or mv.gain > best.gain):
                best = mv
        if best is None:
            return tree
        cur = apply_swap(inst, cur, best.removed, best.added_edges)
    raise RuntimeError("local search exceeded its strict-decrease swap bound")


def initial_solution(inst: RobustInstance, w: Sequence[float], terminals: Iterable[int] | None = None) -> EdgeMultiset:
    """Union of pairwise terminal shortest paths with cycles broken and dead ends pruned."""
    w = np.asarray(w, dtype=float)
    terms = sorted(inst.terminals if terminals is None else terminals)
    adj = adjacency(inst)
    union: set[int] = set()
    for k, s in enumerate(terms):
        _, pred = dijkstra(adj, w, s)
        for t in terms[k + 1:]:
            union.update(path_edges(inst, pred, s, t))
    forest = break_cycles(inst, union, w)
    return EdgeMultiset.from_edges(inst.m, prune_leaves(inst, forest, set(terms)))
