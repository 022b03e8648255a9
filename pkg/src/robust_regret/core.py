"""Instance model, integral solutions, cost evaluation and the text formats.

Vertices are 0-indexed in memory and 1-indexed in files. Edges are addressed by
their position in ``RobustInstance.edges`` (1-indexed in files as well).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

TOL = 1e-9


class Kind(enum.Enum):
    STEINER = "steiner"
    TSP = "tsp"


class RGIError(ValueError):
    """Base class for every instance-format or instance-invariant failure."""


class RGISyntaxError(RGIError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class BoundsError(RGIError):
    """An edge has lower > upper, a negative bound, or a non-finite bound."""


class DisconnectedError(RGIError):
    pass


class TerminalError(RGIError):
    """Terminal out of range, empty terminal set, or wrong TSP terminal set."""


class SelfLoopError(RGIError):
    pass


class InfeasibleSolutionError(ValueError):
    pass


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    lower: float
    upper: float

    def other(self, w: int) -> int:
        return self.v if w == self.u else self.u


@dataclass(frozen=True)
class RobustInstance:
    vertex_count: int
    edges: tuple[Edge, ...]
    terminals: frozenset[int]
    kind: Kind = Kind.STEINER

    def __post_init__(self) -> None:
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "terminals", frozenset(self.terminals))
        validate(self)

    @property
    def n(self) -> int:
        return self.vertex_count

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def lower(self) -> np.ndarray:
        arr = np.array([e.lower for e in self.edges], dtype=float)
        arr.flags.writeable = False
        return arr

    @cached_property
    def upper(self) -> np.ndarray:
        arr = np.array([e.upper for e in self.edges], dtype=float)
        arr.flags.writeable = False
        return arr

    @cached_property
    def endpoints(self) -> np.ndarray:
        arr = np.array([(e.u, e.v) for e in self.edges], dtype=np.int64).reshape(-1, 2)
        arr.flags.writeable = False
        return arr

    @cached_property
    def incidence(self) -> tuple[tuple[int, ...], ...]:
        """Edge indices incident to each vertex, in index order."""
        inc: list[list[int]] = [[] for _ in range(self.vertex_count)]
        for i, e in enumerate(self.edges):
            inc[e.u].append(i)
            inc[e.v].append(i)
        return tuple(tuple(x) for x in inc)

    @cached_property
    def sorted_terminals(self) -> tuple[int, ...]:
        return tuple(sorted(self.terminals))

    def with_bounds(self, lower: Sequence[float], upper: Sequence[float]) -> RobustInstance:
        edges = tuple(Edge(e.u, e.v, float(lo), float(hi)) for e, lo, hi in zip(self.edges, lower, upper))
        return RobustInstance(self.vertex_count, edges, self.terminals, self.kind)

    def with_kind(self, kind: Kind) -> RobustInstance:
        terms = frozenset(range(self.vertex_count)) if kind is Kind.TSP else self.terminals
        return RobustInstance(self.vertex_count, self.edges, terms, kind)


def _connected(n: int, pairs: Iterable[tuple[int, int]]) -> bool:
    if n == 0:
        return True
    parent = list(range(n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    comps = n
    for a, b in pairs:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            comps -= 1
    return comps == 1


def validate(inst: RobustInstance) -> None:
    n = inst.vertex_count
    if n < 1:
        raise RGIError("vertex count must be positive")
    for i, e in enumerate(inst.edges):
        if not (0 <= e.u < n and 0 <= e.v < n):
            raise RGIError(f"edge {i + 1} has an endpoint out of range")
        if e.u == e.v:
            raise SelfLoopError(f"edge {i + 1} is a self-loop")
        if not (math.isfinite(e.lower) and math.isfinite(e.upper)):
            raise BoundsError(f"edge {i + 1} has a non-finite bound")
        if e.lower < 0:
            raise BoundsError(f"edge {i + 1} has a negative lower bound")
        if e.lower > e.upper:
            raise BoundsError(f"edge {i + 1}: lower bound {e.lower!r} exceeds upper bound {e.upper!r}")
    for t in inst.terminals:
        if not 0 <= t < n:
            raise TerminalError(f"terminal {t + 1} out of range")
    if inst.kind is Kind.STEINER and not inst.terminals:
        raise TerminalError("Steiner instances need at least one terminal")
    if inst.kind is Kind.TSP and inst.terminals != frozenset(range(n)):
        raise TerminalError("TSP instances must have every vertex as a terminal")
    if not _connected(n, ((e.u, e.v) for e in inst.edges)):
        raise DisconnectedError("graph is not connected")


# ---------------------------------------------------------------------------
# Solutions


@dataclass(frozen=True)
class EdgeMultiset:
    mult: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "mult", tuple(int(k) for k in self.mult))
        if any(k < 0 for k in self.mult):
            raise ValueError("multiplicities must be nonnegative")

    @classmethod
    def from_edges(cls, m: int, edges: Iterable[int], times: int = 1) -> EdgeMultiset:
        mult = [0] * m
        for i in edges:
            mult[i] += times
        return cls(tuple(mult))

    @classmethod
    def empty(cls, m: int) -> EdgeMultiset:
        return cls((0,) * m)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, k in enumerate(self.mult) if k)

    def as_array(self) -> np.ndarray:
        return np.array(self.mult, dtype=float)

    def __len__(self) -> int:
        return len(self.mult)


def is_steiner_tree(inst: RobustInstance, sol: EdgeMultiset) -> bool:
    if len(sol) != inst.m or any(k > 1 for k in sol.mult):
        return False
    chosen = sol.support
    verts = {v for i in chosen for v in (inst.edges[i].u, inst.edges[i].v)}
    verts |= inst.terminals
    if len(chosen) != len(verts) - 1:
        return False
    index = {v: j for j, v in enumerate(sorted(verts))}
    return _connected(len(verts), ((index[inst.edges[i].u], index[inst.edges[i].v]) for i in chosen))


def is_tsp_multiset(inst: RobustInstance, sol: EdgeMultiset) -> bool:
    if len(sol) != inst.m or any(k > 2 for k in sol.mult):
        return False
    deg = [0] * inst.n
    for i, k in enumerate(sol.mult):
        e = inst.edges[i]
        deg[e.u] += k
        deg[e.v] += k
    if any(d % 2 for d in deg):
        return False
    if inst.n == 1:
        return True
    return _connected(inst.n, ((inst.edges[i].u, inst.edges[i].v) for i in sol.support))


def is_feasible(inst: RobustInstance, sol: EdgeMultiset) -> bool:
    if inst.kind is Kind.TSP:
        return is_tsp_multiset(inst, sol)
    return is_steiner_tree(inst, sol)


def require_feasible(inst: RobustInstance, sol: EdgeMultiset) -> None:
    if not is_feasible(inst, sol):
        raise InfeasibleSolutionError(f"solution is not a feasible {inst.kind.value} solution")


def check_realization(inst: RobustInstance, d: Sequence[float]) -> np.ndarray:
    arr = np.asarray(d, dtype=float)
    if arr.shape != (inst.m,):
        raise ValueError(f"realization has length {arr.shape}, expected {inst.m}")
    if np.any(arr < inst.lower - TOL) or np.any(arr > inst.upper + TOL):
        raise ValueError("realization lies outside the box")
    return arr


def solution_cost(inst: RobustInstance, sol: EdgeMultiset, d: Sequence[float], check: bool = True) -> float:
    if check:
        require_feasible(inst, sol)
    return float(sum(k * float(x) for k, x in zip(sol.mult, d) if k))


def adversarial_realization(inst: RobustInstance, sol: EdgeMultiset, adv: EdgeMultiset) -> np.ndarray:
    """Box vertex maximizing sol(d) - adv(d): u_e where sol uses e more often, else l_e."""
    require_feasible(inst, sol)
    require_feasible(inst, adv)
    s = np.array(sol.mult)
    a = np.array(adv.mult)
    return np.where(s > a, inst.upper, inst.lower)


def derived_weights(inst: RobustInstance, x: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Return (c, c') with c = u x - l x + l and c' = l - l x."""
    x = np.asarray(x, dtype=float)
    if x.shape != (inst.m,):
        raise ValueError("fractional vector has the wrong length")
    if np.any(x < -TOL) or np.any(x > 1 + TOL):
        raise ValueError("fractional values must lie in [0, 1]")
    x = np.clip(x, 0.0, 1.0)
    lo, hi = inst.lower, inst.upper
    c = hi * x - lo * x + lo
    c2 = lo - lo * x
    return np.maximum(c, 0.0), np.maximum(c2, 0.0)


# ---------------------------------------------------------------------------
# Text formats


def _fmt(x: float) -> str:
    x = float(x)
    if x.is_integer() and abs(x) < 2**53:
        return str(int(x))
    return repr(x)


def _tokens(text: str):
    """Yield (line number, [(column, token), ...]) for non-empty, non-comment lines."""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        toks = []
        col = 0
        for part in line.split():
            col = line.index(part, col)
            toks.append((col + 1, part))
            col += len(part)
        if toks:
            yield lineno, toks


def _int(tok: tuple[int, str], lineno: int) -> int:
    try:
        return int(tok[1])
    except ValueError:
        raise RGISyntaxError(f"expected an integer, got {tok[1]!r}", lineno, tok[0]) from None


def _float(tok: tuple[int, str], lineno: int) -> float:
    try:
        return float(tok[1])
    except ValueError:
        raise RGISyntaxError(f"expected a number, got {tok[1]!r}", lineno, tok[0]) from None


def _arity(toks: list, k: int, lineno: int) -> None:
    if len(toks) != k:
        col = toks[min(len(toks), k) - 1][0] if toks else 1
        raise RGISyntaxError(f"expected {k - 1} fields after {toks[0][1]!r}, got {len(toks) - 1}", lineno, col)


def parse_instance(text: str, kind: Kind = Kind.STEINER) -> RobustInstance:
    header = None
    edges: list[Edge] = []
    terms: list[int] = []
    for lineno, toks in _tokens(text):
        tag = toks[0][1]
        if header is None:
            if tag != "p":
                raise RGISyntaxError("expected header 'p rgi <n> <m> <k>'", lineno, toks[0][0])
            _arity(toks, 5, lineno)
            if toks[1][1] != "rgi":
                raise RGISyntaxError(f"unknown format {toks[1][1]!r}", lineno, toks[1][0])
            header = tuple(_int(t, lineno) for t in toks[2:])
            if header[0] < 1 or header[1] < 0 or header[2] < 0:
                raise RGISyntaxError("header counts out of range", lineno, toks[2][0])
            continue
        n = header[0]
        if tag == "e":
            _arity(toks, 5, lineno)
            if terms:
                raise RGISyntaxError("edge line after terminal lines", lineno, toks[0][0])
            u, v = _int(toks[1], lineno), _int(toks[2], lineno)
            for tok, w in ((toks[1], u), (toks[2], v)):
                if not 1 <= w <= n:
                    raise RGISyntaxError(f"vertex {w} out of range 1..{n}", lineno, tok[0])
            lo, hi = _float(toks[3], lineno), _float(toks[4], lineno)
            edges.append(Edge(u - 1, v - 1, lo, hi))
        elif tag == "t":
            _arity(toks, 2, lineno)
            t = _int(toks[1], lineno)
            if not 1 <= t <= n:
                raise TerminalError(f"line {lineno}: terminal {t} out of range 1..{n}")
            terms.append(t - 1)
        else:
            raise RGISyntaxError(f"unknown line type {tag!r}", lineno, toks[0][0])
    if header is None:
        raise RGISyntaxError("missing header", 1, 1)
    n, m, k = header
    if len(edges) != m:
        raise RGISyntaxError(f"header declares {m} edges, found {len(edges)}", 1, 1)
    if len(terms) != k:
        raise RGISyntaxError(f"header declares {k} terminals, found {len(terms)}", 1, 1)
    if kind is Kind.TSP:
        if terms and set(terms) != set(range(n)):
            raise TerminalError("TSP instances must list every vertex as a terminal (or none)")
        terms = list(range(n))
    return RobustInstance(n, tuple(edges), frozenset(terms), kind)


def serialize_instance(inst: RobustInstance) -> str:
    lines = [f"p rgi {inst.n} {inst.m} {len(inst.terminals)}"]
    lines += [f"e {e.u + 1} {e.v + 1} {_fmt(e.lower)} {_fmt(e.upper)}" for e in inst.edges]
    lines += [f"t {t + 1}" for t in inst.sorted_terminals]
    return "\n".join(lines) + "\n"


def serialize_solution(sol: EdgeMultiset, value: float) -> str:
    lines = [f"s {_fmt(value)}"]
    lines += [f"m {i + 1} {k}" for i, k in enumerate(sol.mult) if k]
    return "\n".join(lines) + "\n"


def parse_solution(text: str, m: int) -> tuple[EdgeMultiset, float | None]:
    mult = [0] * m
    value = None
    for lineno, toks in _tokens(text):
        tag = toks[0][1]
        if tag == "s":
            _arity(toks, 2, lineno)
            value = _float(toks[1], lineno)
        elif tag == "m":
            _arity(toks, 3, lineno)
            i, k = _int(toks[1], lineno), _int(toks[2], lineno)
            if not 1 <= i <= m:
                raise RGISyntaxError(f"edge index {i} out of range 1..{m}", lineno, toks[1][0])
            if k < 0:
                raise RGISyntaxError("negative multiplicity", lineno, toks[2][0])
            mult[i - 1] = k
        else:
            raise RGISyntaxError(f"unknown line type {tag!r}", lineno, toks[0][0])
    return EdgeMultiset(tuple(mult)), value


def serialize_realization(d: Sequence[float]) -> str:
    return "".join(f"d {i + 1} {_fmt(x)}\n" for i, x in enumerate(d))


def parse_realization(text: str, m: int) -> np.ndarray:
    d = np.full(m, np.nan)
    for lineno, toks in _tokens(text):
        if toks[0][1] != "d":
            raise RGISyntaxError(f"unknown line type {toks[0][1]!r}", lineno, toks[0][0])
        _arity(toks, 3, lineno)
        i = _int(toks[1], lineno)
        if not 1 <= i <= m:
            raise RGISyntaxError(f"edge index {i} out of range 1..{m}", lineno, toks[1][0])
        d[i - 1] = _float(toks[2], lineno)
    if np.isnan(d).any():
        raise RGISyntaxError("realization does not cover every edge", 1, 1)
    return d


@dataclass
class FractionalRecord:
    """What the fractional text format stores: x, r and constraint counts."""

    x: np.ndarray
    r: float
    counts: dict[str, int] = field(default_factory=dict)


def serialize_fractional(x: Sequence[float], r: float, counts: dict[str, int] | None = None) -> str:
    lines = [f"x {i + 1} {_fmt(v)}" for i, v in enumerate(x)]
    lines.append(f"r {_fmt(r)}")
    lines += [f"c {name} {cnt}" for name, cnt in sorted((counts or {}).items())]
    return "\n".join(lines) + "\n"


def parse_fractional(text: str, m: int) -> FractionalRecord:
    x = np.zeros(m)
    r = None
    counts: dict[str, int] = {}
    for lineno, toks in _tokens(text):
        tag = toks[0][1]
        if tag == "x":
            _arity(toks, 3, lineno)
            i = _int(toks[1], lineno)
            if not 1 <= i <= m:
                raise RGISyntaxError(f"edge index {i} out of range 1..{m}", lineno, toks[1][0])
            x[i - 1] = _float(toks[2], lineno)
        elif tag == "r":
            _arity(toks, 2, lineno)
            r = _float(toks[1], lineno)
        elif tag == "c":
            _arity(toks, 3, lineno)
            counts[toks[1][1]] = _int(toks[2], lineno)
        else:
            raise RGISyntaxError(f"unknown line type {tag!r}", lineno, toks[0][0])
    if r is None:
        raise RGISyntaxError("missing 'r' line", 1, 1)
    return FractionalRecord(x, r, counts)
