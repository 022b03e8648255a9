"""Small graph primitives shared by the solvers: MST, shortest paths, max-flow."""
from __future__ import annotations

import heapq
from collections import deque
from typing import Iterable, Sequence

import numpy as np
from scipy.cluster.hierarchy import DisjointSet

from .core import TOL, RobustInstance

INF = float("inf")


def kruskal(n: int, endpoints: Sequence[tuple[int, int]], weights: Sequence[float],
            candidates: Iterable[int] | None = None) -> list[int]:
    """Minimum spanning forest; ties broken by edge index."""
    idx = range(len(endpoints)) if candidates is None else candidates
    order = sorted(idx, key=lambda i: (weights[i], i))
    ds = DisjointSet(range(n))
    chosen = []
    for i in order:
        u, v = endpoints[i]
        if ds.merge(u, v):
            chosen.append(i)
            if len(chosen) == n - 1:
                break
    return chosen


def adjacency(inst: RobustInstance) -> list[list[tuple[int, int]]]:
    """adj[v] = [(neighbour, edge index), ...] in edge-index order."""
    adj: list[list[tuple[int, int]]] = [[] for _ in range(inst.n)]
    for i, e in enumerate(inst.edges):
        adj[e.u].append((e.v, i))
        adj[e.v].append((e.u, i))
    return adj


def dijkstra(adj: list[list[tuple[int, int]]], w: Sequence[float], source: int,
             allowed: Sequence[bool] | None = None) -> tuple[list[float], list[int]]:
    """Distances and predecessor edges from ``source``.

    Equal-length alternatives keep the lower predecessor edge index. Vertices with
    ``allowed[v]`` false are never entered.
    """
    n = len(adj)
    dist = [INF] * n
    pred = [-1] * n
    dist[source] = 0.0
    heap = [(0.0, source)]
    done = [False] * n
    while heap:
        dv, v = heapq.heappop(heap)
        if done[v]:
            continue
        done[v] = True
        for x, i in adj[v]:
            if done[x] or (allowed is not None and not allowed[x]):
                continue
            nd = dv + w[i]
            if nd < dist[x] - TOL:
                dist[x] = nd
                pred[x] = i
                heapq.heappush(heap, (nd, x))
            elif nd <= dist[x] + TOL and i < pred[x]:
                pred[x] = i
    return dist, pred


def path_edges(inst: RobustInstance, pred: Sequence[int], source: int, target: int) -> list[int]:
    """Edge indices along the predecessor path source -> target."""
    out = []
    v = target
    while v != source:
        i = pred[v]
        if i < 0:
            raise ValueError("target unreachable")
        out.append(i)
        v = inst.edges[i].other(v)
    out.reverse()
    return out


def all_pairs(inst: RobustInstance, w: Sequence[float]) -> tuple[np.ndarray, list[list[int]]]:
    """Shortest-path distance matrix and per-source predecessor arrays."""
    adj = adjacency(inst)
    dist = np.empty((inst.n, inst.n))
    preds = []
    for s in range(inst.n):
        d, p = dijkstra(adj, w, s)
        dist[s] = d
        preds.append(p)
    return dist, preds


def floyd_warshall_batch(n: int, endpoints: np.ndarray, D: np.ndarray) -> np.ndarray:
    """Metric closures for a batch of realizations ``D`` of shape (R, m)."""
    R = D.shape[0]
    dist = np.full((R, n, n), INF)
    idx = np.arange(n)
    dist[:, idx, idx] = 0.0
    for i, (u, v) in enumerate(endpoints):
        col = D[:, i]
        dist[:, u, v] = np.minimum(dist[:, u, v], col)
        dist[:, v, u] = dist[:, u, v]
    for k in range(n):
        np.minimum(dist, dist[:, :, k, None] + dist[:, None, k, :], out=dist)
    return dist


def tree_path(inst: RobustInstance, tree_edges: Iterable[int], s: int, t: int) -> list[int]:
    """Edge indices of the unique s-t path inside a forest."""
    adj: dict[int, list[tuple[int, int]]] = {}
    for i in tree_edges:
        e = inst.edges[i]
        adj.setdefault(e.u, []).append((e.v, i))
        adj.setdefault(e.v, []).append((e.u, i))
    pred: dict[int, int] = {s: -1}
    queue = deque([s])
    while queue:
        v = queue.popleft()
        if v == t:
            break
        for x, i in adj.get(v, ()):
            if x not in pred:
                pred[x] = i
                queue.append(x)
    if t not in pred:
        raise ValueError("vertices are not connected in the forest")
    out = []
    v = t
    while v != s:
        i = pred[v]
        out.append(i)
        v = inst.edges[i].other(v)
    out.reverse()
    return out


def prune_leaves(inst: RobustInstance, edges: Iterable[int], keep: frozenset[int] | set[int]) -> set[int]:
    """Repeatedly drop leaf edges whose leaf vertex is not in ``keep``."""
    chosen = set(edges)
    deg: dict[int, list[int]] = {}
    for i in chosen:
        e = inst.edges[i]
        deg.setdefault(e.u, []).append(i)
        deg.setdefault(e.v, []).append(i)
    stack = [v for v, es in deg.items() if len(es) == 1 and v not in keep]
    while stack:
        v = stack.pop()
        live = [i for i in deg[v] if i in chosen]
        if len(live) != 1 or v in keep:
            continue
        i = live[0]
        chosen.discard(i)
        x = inst.edges[i].other(v)
        if x not in keep and sum(1 for j in deg[x] if j in chosen) == 1:
            stack.append(x)
    return chosen


def low_degree_fraction(n: int, pairs: Iterable[tuple[int, int]]) -> float:
    """Share of the ``n`` vertices with degree at most 2; above 1/2 for every tree."""
    deg = np.zeros(n, dtype=np.int64)
    for a, b in pairs:
        deg[a] += 1
        deg[b] += 1
    return float(np.count_nonzero(deg <= 2)) / n


def break_cycles(inst: RobustInstance, edges: Iterable[int], w: Sequence[float]) -> list[int]:
    """Spanning forest of the given edge set (cheapest first, then by index)."""
    return kruskal(inst.n, inst.endpoints, w, candidates=sorted(set(edges)))


# ---------------------------------------------------------------------------
# Max-flow


def max_flow_min_cut(n: int, arcs: Sequence[tuple[int, int, float]], s: int, t: int,
                     eps: float = 1e-12) -> tuple[float, frozenset[int]]:
    """Highest-label push-relabel on an undirected capacitated graph.

    Each (a, b, cap) is an undirected edge. Returns the cut value and the source
    side of a minimum cut (vertices reachable from s in the residual graph).
    """
    if s == t:
        raise ValueError("source equals sink")
    head: list[int] = []
    cap: list[float] = []
    out: list[list[int]] = [[] for _ in range(n)]
    for a, b, c in arcs:
        if a == b or c <= eps:
            continue
        out[a].append(len(head))
        head.append(b)
        cap.append(c)
        out[b].append(len(head))
        head.append(a)
        cap.append(c)
    height = [0] * n
    height[s] = n
    excess = [0.0] * n
    buckets: list[list[int]] = [[] for _ in range(2 * n)]
    active = [False] * n

    def activate(x: int) -> None:
        if x != s and x != t and not active[x] and excess[x] > eps:
            active[x] = True
            buckets[height[x]].append(x)

    for k in out[s]:
        c = cap[k]
        if c > eps:
            x = head[k]
            cap[k] = 0.0
            cap[k ^ 1] += c
            excess[x] += c
            activate(x)
    top = n - 1
    cur = [0] * n
    while top >= 0:
        if not buckets[top]:
            top -= 1
            continue
        v = buckets[top].pop()
        active[v] = False
        while excess[v] > eps:
            if cur[v] == len(out[v]):
                height[v] = 1 + min(height[head[k]] for k in out[v] if cap[k] > eps)
                cur[v] = 0
                continue
            k = out[v][cur[v]]
            x = head[k]
            if cap[k] > eps and height[v] == height[x] + 1:
                amt = min(excess[v], cap[k])
                cap[k] -= amt
                cap[k ^ 1] += amt
                excess[v] -= amt
                excess[x] += amt
                activate(x)
            else:
                cur[v] += 1
        top = max(top, max((height[x] for x in range(n) if active[x]), default=-1))
    seen = {s}
    queue = deque([s])
    while queue:
        v = queue.popleft()
        for k in out[v]:
            x = head[k]
            if cap[k] > eps and x not in seen:
                seen.add(x)
                queue.append(x)
    value = sum(c for a, b, c in arcs if (a in seen) != (b in seen))
    return value, frozenset(seen)


def global_min_cut(n: int, arcs: Sequence[tuple[int, int, float]]) -> tuple[float, frozenset[int]]:
    """Minimum over t of the vertex-0 / t cut. Returns the side containing vertex 0."""
    best = (INF, frozenset())
    for t in range(1, n):
        val, side = max_flow_min_cut(n, arcs, 0, t)
        if val < best[0] - 1e-12:
            best = (val, side)
    return best
