"""Seeded instance generators.

All randomness comes from :class:`SplitMix64`, so a (seed, parameters) pair
reproduces the same instance on any platform. The transition on the 64-bit
state ``s`` is::

    s = (s + 0x9E3779B97F4A7C15) mod 2^64
    z = s
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2^64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) mod 2^64
    output z ^ (z >> 31)

``random()`` is ``(output >> 11) * 2^-53``. ``below(k)`` draws outputs until one
is under ``floor(2^64 / k) * k`` and returns it modulo ``k`` (no bias).
"""
from __future__ import annotations

from .core import Edge, Kind, RobustInstance

_MASK = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def random(self) -> float:
        return (self.next_u64() >> 11) * 2.0**-53

    def below(self, k: int) -> int:
        if k <= 0:
            raise ValueError("below() needs a positive bound")
        limit = ((1 << 64) // k) * k
        while True:
            z = self.next_u64()
            if z < limit:
                return z % k

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]


def gen_failure_instance(n: int, eps: float) -> RobustInstance:
    """Hub 0 joined to leaves 1..n by fixed spokes of length 1-eps, leaves joined in a
    ring by edges with range [0, 2 - 1/(n-1)]. Spokes come first, then ring edges
    (i, i+1) for i = 1..n-1, then (n, 1)."""
    if n < 3:
        raise ValueError("the failure family needs n >= 3 leaves")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    spoke = 1 - eps
    ring = 2 - 1 / (n - 1)
    edges = [Edge(0, i, spoke, spoke) for i in range(1, n + 1)]
    edges += [Edge(i, i + 1, 0.0, ring) for i in range(1, n)]
    edges.append(Edge(n, 1, 0.0, ring))
    return RobustInstance(n + 1, tuple(edges), frozenset(range(n + 1)), Kind.TSP)


def gen_random(seed: int, n: int, m: int, terminal_density: float = 0.5,
               max_bound: float = 10.0, kind: Kind = Kind.STEINER,
               zero_lower: bool = False, step: float = 0.25) -> RobustInstance:
    """Connected simple graph: a random spanning tree plus ``m - n + 1`` extra edges.

    Bounds are multiples of ``step``: ``lower`` uniform on [0, max_bound] and
    ``upper = lower + width`` with the width drawn the same way. Each vertex is a
    terminal with probability ``terminal_density``; at least min(2, n) terminals
    are kept.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if m < n - 1:
        raise ValueError(f"m={m} edges cannot connect n={n} vertices")
    if m > n * (n - 1) // 2:
        raise ValueError(f"m={m} exceeds the {n * (n - 1) // 2} edges of a simple graph on {n} vertices")
    if kind is Kind.TSP and n < 2:
        raise ValueError("TSP instances need at least two vertices")
    rng = SplitMix64(seed)
    order = list(range(n))
    rng.shuffle(order)
    pairs = []
    for i in range(1, n):
        a, b = order[i], order[rng.below(i)]
        pairs.append((min(a, b), max(a, b)))
    present = set(pairs)
    rest = [(a, b) for a in range(n) for b in range(a + 1, n) if (a, b) not in present]
    for _ in range(m - (n - 1)):
        pairs.append(rest.pop(rng.below(len(rest))))
    rng.shuffle(pairs)
    ticks = int(round(max_bound / step))
    edges = []
    for a, b in pairs:
        lo = rng.below(ticks + 1) * step
        width = rng.below(ticks + 1) * step
        if zero_lower:
            lo = 0.0
        edges.append(Edge(a, b, float(lo), float(lo + width)))
    if kind is Kind.TSP:
        terms = set(range(n))
    else:
        terms = {v for v in range(n) if rng.random() < terminal_density}
        for v in order:
            if len(terms) >= min(2, n):
                break
            terms.add(v)
    return RobustInstance(n, tuple(edges), frozenset(terms), kind)
