"""robust-regret: generate, solve, evaluate and cross-check robust instances.

Exit codes: 0 success or PASS, 1 FAIL verdict, 2 usage or input error,
3 a cap was exceeded (or the verdict is inconclusive because of one).
Errors go to stderr as one line: ``error <kind> <message>``.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .core import (TOL, EdgeMultiset, InfeasibleSolutionError, Kind, RGIError, RGISyntaxError, RobustInstance,
                   _fmt, derived_weights, is_feasible, parse_fractional, parse_instance, parse_realization,
                   parse_solution, serialize_fractional, serialize_instance, serialize_realization,
                   serialize_solution)
from .double_approx import PRESETS, PhaseStats, SwapCache, double_approx_all, preset
from .exact import (CapExceeded, box_vertices, free_edges, min_regret_solution, opt, opt_values,
                    regret_of)
from .generators import SplitMix64, gen_failure_instance, gen_random
from .lp import CuttingPlaneError, cutting_plane_solve, general_oracle, rrtsp_oracle, zlb_oracle
from .local_search import initial_solution, local_search
from .rounding import RoundingParams, round_robust

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CAP = 0, 1, 2, 3
METHODS = ("local-search", "double-approx", "fractional", "round", "end-to-end")


class CliError(Exception):
    def __init__(self, kind: str, message: str, code: int = EXIT_USAGE):
        super().__init__(message)
        self.kind = kind
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # noqa: D401 - argparse hook
        raise CliError("usage", message)


def _read(path: str) -> str:
    try:
        return sys.stdin.read() if path == "-" else Path(path).read_text()
    except OSError as exc:
        raise CliError("io", f"{path}: {exc.strerror}") from None


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text)
    except OSError as exc:
        raise CliError("io", f"{out}: {exc.strerror}") from None


def _load(args) -> RobustInstance:
    return parse_instance(_read(args.instance), Kind(args.kind))


def _worst_cost(inst: RobustInstance, sol: EdgeMultiset) -> float:
    return float(inst.upper @ sol.as_array())


# ---------------------------------------------------------------------------
# gen


def cmd_gen(args) -> int:
    if args.family == "failure":
        inst = gen_failure_instance(args.n, args.eps)
    else:
        kind = Kind(args.kind)
        inst = gen_random(args.seed, args.n, args.m, args.density, args.max_bound, kind, args.zero_lower)
    _emit(serialize_instance(inst), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# solve


def _fractional_x(args, inst: RobustInstance, default: float | None = None) -> tuple[np.ndarray, float]:
    if args.fractional is None:
        if default is None:
            raise CliError("usage", f"--method {args.method} needs --fractional FILE")
        return np.full(inst.m, default), 0.0
    rec = parse_fractional(_read(args.fractional), inst.m)
    return rec.x, rec.r


def _oracle(args, inst: RobustInstance):
    choice = args.oracle
    if choice == "auto":
        if inst.kind is Kind.TSP:
            choice = "tsp"
        else:
            choice = "zlb" if not np.any(inst.lower > 0) else "general"
    if choice == "tsp":
        if inst.kind is not Kind.TSP:
            raise CliError("usage", "the tsp oracle needs --kind tsp")
        return rrtsp_oracle, {}
    if inst.kind is not Kind.STEINER:
        raise CliError("usage", f"the {choice} oracle needs --kind steiner")
    if choice == "zlb":
        if np.any(inst.lower > 0):
            raise CliError("usage", "the zlb oracle needs every lower bound to be 0")
        return zlb_oracle(args.eps), {}
    stats = PhaseStats()
    return general_oracle(preset(args.preset), stats), {"phases": stats}


def _solve_fractional(args, inst: RobustInstance, summary: list[str]):
    oracle, extra = _oracle(args, inst)
    frac = cutting_plane_solve(inst, oracle)
    summary.append(f"# r {_fmt(frac.r)}")
    summary.append(f"# iterations {frac.iterations}")
    for name, cnt in frac.counts().items():
        summary.append(f"# constraints {name} {cnt}")
    if "phases" in extra:
        st = extra["phases"]
        summary.append(f"# phases outer {st.outer_iterations} forward {st.forward_swaps} backward {st.backward_swaps}")
    return frac


def cmd_solve(args) -> int:
    inst = _load(args)
    summary = [f"# method {args.method}"]
    if args.method == "local-search":
        if inst.kind is not Kind.STEINER:
            raise CliError("usage", "local-search needs --kind steiner")
        w = _weights(args, inst)
        sol = local_search(inst, w, initial_solution(inst, w), args.eps)
        summary.append(f"# cost {_fmt(float(w @ sol.as_array()))}")
        body = serialize_solution(sol, _worst_cost(inst, sol))
    elif args.method == "double-approx":
        if inst.kind is not Kind.STEINER:
            raise CliError("usage", "double-approx needs --kind steiner")
        x, _ = _fractional_x(args, inst, default=0.5)
        c, c2 = derived_weights(inst, x)
        stats = PhaseStats()
        trees = [t for _, ts in double_approx_all(inst, c, c2, preset(args.preset), SwapCache(), stats) for t in ts]
        # the tree with the largest regret expression sum_{e not in T} u x + sum_{T} l x - sum_{T} l
        score = [float(inst.upper @ x - c @ t.as_array()) for t in trees]
        best = trees[int(np.argmax(score))]
        summary.append(f"# trees {len(trees)}")
        summary.append(f"# regret_expression {_fmt(max(score))}")
        summary.append(f"# phases outer {stats.outer_iterations} forward {stats.forward_swaps} "
                       f"backward {stats.backward_swaps}")
        body = serialize_solution(best, _worst_cost(inst, best))
    elif args.method == "fractional":
        frac = _solve_fractional(args, inst, summary)
        body = serialize_fractional(frac.x, frac.r, frac.counts())
    elif args.method == "round":
        x, r = _fractional_x(args, inst)
        sol = round_robust(inst, x, _rounding(args, inst))
        summary.append(f"# r {_fmt(r)}")
        body = serialize_solution(sol, _worst_cost(inst, sol))
    else:
        frac = _solve_fractional(args, inst, summary)
        sol = round_robust(inst, frac.x, _rounding(args, inst))
        body = serialize_solution(sol, _worst_cost(inst, sol))
    text = "\n".join(summary) + "\n" + body
    if args.out is not None:
        sys.stdout.write("\n".join(summary) + "\n")
    _emit(text, args.out)
    return EXIT_OK


def _weights(args, inst: RobustInstance) -> np.ndarray:
    if args.realization is not None:
        return parse_realization(_read(args.realization), inst.m)
    return {"lower": inst.lower, "upper": inst.upper, "midpoint": (inst.lower + inst.upper) / 2}[args.weights]


def _rounding(args, inst: RobustInstance) -> RoundingParams:
    base = RoundingParams.for_kind(inst.kind)
    return RoundingParams(args.gamma or base.gamma, args.delta or base.delta)


# ---------------------------------------------------------------------------
# eval


@dataclass
class EvalReport:
    alpha: float
    beta: float
    mr: float
    mr_exact: bool
    sampled: bool
    rows: list[tuple[int, float, float]]  # (vertex id, sol cost, opt cost)
    worst: np.ndarray

    @property
    def max_excess(self) -> float:
        return max(s - self.alpha * o for _, s, o in self.rows)

    @property
    def bound(self) -> float:
        return self.beta * self.mr

    @property
    def verdict(self) -> str:
        if self.max_excess > self.bound + TOL:
            return "FAIL"
        if not self.mr_exact:
            return "INCONCLUSIVE"
        return "SAMPLED" if self.sampled else "PASS"


def evaluate(inst: RobustInstance, sol: EdgeMultiset, alpha: float, beta: float,
             mr_witness: EdgeMultiset | None = None, sample: int | None = None, seed: int = 0) -> EvalReport:
    """Sweep the box (or a seeded sample of its vertices) for sol(d) - alpha opt(d) against beta MR."""
    if not is_feasible(inst, sol):
        raise InfeasibleSolutionError("solution is infeasible for the instance")
    try:
        mr, exact = min_regret_solution(inst).mr, True
    except CapExceeded:
        if mr_witness is None:
            raise
        mr, exact = regret_of(inst, mr_witness).regret_value, False
    s = sol.as_array()
    if sample is None:
        free = [i for i in free_edges(inst) if s[i] > 0]
        D = box_vertices(inst, free)
        ids = np.arange(D.shape[0])
    else:
        free = free_edges(inst)
        rng = SplitMix64(seed)
        ids = np.array([sum(rng.below(2) << j for j in range(len(free))) for _ in range(sample)], dtype=object)
        D = np.tile(inst.lower, (sample, 1))
        for r, vid in enumerate(ids):
            for j, e in enumerate(free):
                if (vid >> j) & 1:
                    D[r, e] = inst.upper[e]
    opts = opt_values(inst, D)
    sols = D @ s
    rows = [(int(i), float(a), float(b)) for i, a, b in zip(ids, sols, opts)]
    worst = D[int(np.argmax(sols - alpha * opts))]
    return EvalReport(alpha, beta, mr, exact, sample is not None, rows, worst)


def cmd_eval(args) -> int:
    inst = _load(args)
    sol, _ = parse_solution(_read(args.solution), inst.m)
    witness = parse_solution(_read(args.mr_witness), inst.m)[0] if args.mr_witness else None
    rep = evaluate(inst, sol, args.alpha, args.beta, witness, args.sample, args.seed)
    mr_tag = "exact" if rep.mr_exact else "upper-bound"
    lines = [f"alpha {_fmt(rep.alpha)}", f"beta {_fmt(rep.beta)}", f"mr {_fmt(rep.mr)} {mr_tag}",
             f"vertices {len(rep.rows)} {'sampled' if rep.sampled else 'exhaustive'}"]
    top = sorted(rep.rows, key=lambda t: (-(t[1] - rep.alpha * t[2]), t[0]))[: args.rows]
    for vid, sc, oc in top:
        ratio = sc / oc if oc > 0 else float("inf")
        scaled = (sc - rep.alpha * oc) / rep.mr if rep.mr > 0 else float("inf")
        lines.append(f"row {vid} {_fmt(sc)} {_fmt(oc)} {_fmt(ratio)} {_fmt(scaled)}")
    lines.append(f"max_excess {_fmt(rep.max_excess)}")
    lines.append(f"bound {_fmt(rep.bound)}")
    lines.append(f"slack {_fmt(rep.bound - rep.max_excess)}")
    lines.append(serialize_realization(rep.worst).rstrip("\n"))
    lines.append(f"verdict {rep.verdict}")
    _emit("\n".join(lines) + "\n", args.out)
    return {"FAIL": EXIT_FAIL, "INCONCLUSIVE": EXIT_CAP}.get(rep.verdict, EXIT_OK)


# ---------------------------------------------------------------------------
# check


def cmd_check(args) -> int:
    inst = _load(args)
    lines = []
    for name, d in (("lower", inst.lower), ("upper", inst.upper)):
        val, _ = opt(inst, d)
        lines.append(f"opt_{name} {_fmt(val)}")
    if args.solution:
        sol, _ = parse_solution(_read(args.solution), inst.m)
    else:
        sol = opt(inst, (inst.lower + inst.upper) / 2)[1]
        lines.append("solution midpoint-optimum")
    rep = regret_of(inst, sol, full_sweep=True)
    lines.append(f"regret_vertices {_fmt(rep.regret_value)}")
    ok = True
    if inst.kind is Kind.STEINER:
        alt = regret_of(inst, sol, method="adversaries")
        agree = abs(alt.regret_value - rep.regret_value) <= 1e-7
        ok &= agree
        lines.append(f"regret_adversaries {_fmt(alt.regret_value)}")
        lines.append(f"agree {'yes' if agree else 'no'}")
    mrs = min_regret_solution(inst)
    lines.append(f"mr {_fmt(mrs.mr)}")
    lines.append(serialize_realization(rep.witness_realization).rstrip("\n"))
    lines.append(serialize_solution(mrs.mrs, mrs.mr).rstrip("\n"))
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="robust-regret", description="Minimum-regret robust Steiner tree and TSP.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, kind=True):
        if kind:
            sp.add_argument("--kind", choices=[k.value for k in Kind], default="steiner")
        sp.add_argument("--out", help="write the result here instead of stdout")

    g = sub.add_parser("gen", help="generate an instance")
    gsub = g.add_subparsers(dest="family", required=True, parser_class=_Parser)
    gf = gsub.add_parser("failure", help="hub-and-ring family where the double-tree tour has large regret")
    gf.add_argument("--n", type=int, default=10, help="leaf count")
    gf.add_argument("--eps", type=float, default=0.1)
    common(gf, kind=False)
    gr = gsub.add_parser("random", help="seeded random connected instance")
    gr.add_argument("--seed", type=int, default=0)
    gr.add_argument("--n", type=int, required=True)
    gr.add_argument("--m", type=int, required=True)
    gr.add_argument("--density", type=float, default=0.5, help="terminal probability per vertex")
    gr.add_argument("--max-bound", type=float, default=10.0)
    gr.add_argument("--zero-lower", action="store_true")
    common(gr)

    s = sub.add_parser("solve", help="solve an instance")
    s.add_argument("instance")
    s.add_argument("--method", choices=METHODS, default="end-to-end")
    s.add_argument("--preset", choices=sorted(PRESETS), default="fast")
    s.add_argument("--oracle", choices=("auto", "tsp", "zlb", "general"), default="auto")
    s.add_argument("--eps", type=float, default=0.05, help="local-search slack")
    s.add_argument("--fractional", help="fractional point file (round, double-approx)")
    s.add_argument("--weights", choices=("lower", "upper", "midpoint"), default="midpoint")
    s.add_argument("--realization", help="weights for local-search from a realization file")
    s.add_argument("--gamma", type=float, help="factor of the rounding subroutine")
    s.add_argument("--delta", type=float, help="integrality gap used by the rounding weights")
    s.add_argument("--seed", type=int, default=0, help="accepted for symmetry; solving is deterministic")
    common(s)

    e = sub.add_parser("eval", help="check sol(d) <= alpha opt(d) + beta MR over the box")
    e.add_argument("instance")
    e.add_argument("solution")
    e.add_argument("--alpha", type=float, required=True)
    e.add_argument("--beta", type=float, required=True)
    e.add_argument("--mr-witness", help="solution whose regret bounds MR when exact MR is out of reach")
    e.add_argument("--sample", type=int, help="check this many seeded random box vertices instead of all")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--rows", type=int, default=10, help="report rows with the largest excess")
    common(e)

    c = sub.add_parser("check", help="cross-check the exact oracles")
    c.add_argument("instance")
    c.add_argument("--solution")
    common(c)
    return p


COMMANDS = {"gen": cmd_gen, "solve": cmd_solve, "eval": cmd_eval, "check": cmd_check}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except CliError as exc:
        code, kind, msg = exc.code, exc.kind, str(exc)
    except RGISyntaxError as exc:
        code, kind, msg = EXIT_USAGE, "syntax", str(exc)
    except RGIError as exc:
        code, kind, msg = EXIT_USAGE, type(exc).__name__.removesuffix("Error").lower(), str(exc)
    except InfeasibleSolutionError as exc:
        code, kind, msg = EXIT_USAGE, "infeasible", str(exc)
    except CapExceeded as exc:
        code, kind, msg = EXIT_CAP, "cap", str(exc)
    except CuttingPlaneError as exc:
        code, kind, msg = EXIT_CAP, "lp", str(exc)
    except ValueError as exc:
        code, kind, msg = EXIT_USAGE, "value", str(exc)
    sys.stderr.write(f"error {kind} {msg}\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
