"""Command-line driver.

Exit codes: ``check`` returns 0 when no accepting state is reachable, 1 when
one is and 2 on errors or an exhausted node budget; ``sim`` returns 0 when
simulated, 1 when not and 2 on errors; ``gen-hardness --verify`` returns 1 on
disagreement.  Reports go to stdout, wall time and diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
import time
from pathlib import Path

from .explorer import ORDERS, PRUNE_MODES, ExplorationStats, convert_diag_free, reach
from .hardness import build_instance, check_reduction, parse_dimacs, random_cnf3
from .model import LUBounds, ParseError, parse_automaton, uniform_m_bounds, write_automaton
from .simulation import BACKENDS, SimWitness, check_simulation
from .smt import SmtSolver, SolverError
from .zonefile import parse_lu, parse_zone, write_zone

EXIT_OK, EXIT_FOUND, EXIT_ERROR = 0, 1, 2


class UsageError(Exception):
    pass


def _solver(args: argparse.Namespace) -> SmtSolver | None:
    if args.backend != "smt":
        if args.solver or args.solver_args:
            raise UsageError("--solver and --solver-args need --backend smt")
        return None
    return SmtSolver.from_cli(args.solver, args.solver_args)


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _elapsed(t0: float) -> None:
    print(f"wall time: {time.perf_counter() - t0:.3f} s", file=sys.stderr)


# --- check --------------------------------------------------------------------


def _verdict_code(stats: ExplorationStats) -> int:
    return {"unreachable": EXIT_OK, "reachable": EXIT_FOUND}.get(stats.verdict, EXIT_ERROR)


def cmd_check(args: argparse.Namespace) -> int:
    a = parse_automaton(_read(args.model))
    solver = _solver(args)
    t0 = time.perf_counter()
    stats = reach(a, args.prune, args.order, args.backend, solver, args.budget)
    if args.compare is None:
        _elapsed(t0)
        print(stats.to_json() if args.json else stats.to_text())
        return _verdict_code(stats)
    df = reach(convert_diag_free(a), "lu-d", args.order, args.backend, solver, args.budget)
    _elapsed(t0)
    if args.json:
        print(json.dumps({args.prune: stats.as_dict(), "diag-free": df.as_dict()}, sort_keys=True))
    else:
        keys = ("verdict", "nodes_visited", "nodes_pruned", "simulation_tests")
        print(f"{'':18}{args.prune:>14}{'diag-free':>14}")
        for k in keys:
            print(f"{k:18}{getattr(stats, k)!s:>14}{getattr(df, k)!s:>14}")
    if stats.verdict != df.verdict and "inconclusive" not in (stats.verdict, df.verdict):
        print("verdicts differ between the two pipelines", file=sys.stderr)
        return EXIT_ERROR
    return _verdict_code(stats)


# --- sim ------------------------------------------------------------------------


def _witness_dict(w: SimWitness) -> dict:
    return {
        "valuation": {c: str(x) for c, x in w.v.as_dict().items()},
        "cycle": [
            {"src": e.src, "dst": e.dst, "color": e.color.value, "bound": str(e.weight.bound), "closed": e.weight.closed}
            for e in w.cycle
        ],
        "total": {"bound": str(w.total().bound), "closed": w.total().closed},
    }


def cmd_sim(args: argparse.Namespace) -> int:
    z = parse_zone(_read(args.zone))
    z2 = parse_zone(_read(args.zone2))
    if z2 is None:
        raise UsageError(f"{args.zone2}: Z' is empty")
    clocks = z.clocks if z is not None else z2.clocks
    if z is not None and z.clocks != z2.clocks:
        raise UsageError("the two zone files declare different clocks")
    lu: LUBounds
    if args.lu:
        lu = parse_lu(_read(args.lu))
        if tuple(lu.clocks) != clocks:
            raise UsageError("the LU file declares different clocks")
    elif args.m is not None:
        lu = uniform_m_bounds(clocks, args.m)
    else:
        raise UsageError("give --lu FILE or --m M")
    solver = _solver(args)
    t0 = time.perf_counter()
    wit = check_simulation(z, z2, lu, args.backend, solver)
    _elapsed(t0)
    if args.json:
        out = {"simulated": wit is None, "witness": None if wit is None else _witness_dict(wit)}
        print(json.dumps(out, sort_keys=True))
    elif wit is None:
        print("simulated")
    else:
        print("not simulated")
        print(wit.describe())
    return EXIT_OK if wit is None else EXIT_FOUND


# --- gen-hardness -----------------------------------------------------------------


def cmd_gen_hardness(args: argparse.Namespace) -> int:
    if args.cnf:
        try:
            phi = parse_dimacs(_read(args.cnf))
        except ValueError as exc:
            raise UsageError(f"{args.cnf}: {exc}") from None
        stem = Path(args.cnf).stem
    else:
        if args.clauses is None:
            raise UsageError("give a DIMACS file or --clauses N (with --vars and --seed)")
        phi = random_cnf3(random.Random(args.seed), args.vars, args.clauses)
        stem = f"random_s{args.seed}"
    try:
        inst = build_instance(phi, args.m)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{stem}_Z.zone").write_text(write_zone(inst.Z), encoding="utf-8")
    (out / f"{stem}_Zprime.zone").write_text(write_zone(inst.Zprime), encoding="utf-8")
    manifest = inst.manifest()
    manifest["cnf"] = phi.to_dimacs()
    (out / f"{stem}_manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {stem}_Z.zone, {stem}_Zprime.zone, {stem}_manifest.json to {out} ({len(inst.clocks) - 1} clocks)")
    if not args.verify:
        return EXIT_OK
    solver = _solver(args)
    t0 = time.perf_counter()
    rep = check_reduction(phi, args.m, args.backend, solver, inst)
    _elapsed(t0)
    print(rep.line())
    return EXIT_OK if rep.agree else EXIT_FOUND


# --- convert-df ---------------------------------------------------------------------


def cmd_convert_df(args: argparse.Namespace) -> int:
    a = parse_automaton(_read(args.model))
    _write(args.out, write_automaton(convert_diag_free(a)))
    return EXIT_OK


# --- parser ---------------------------------------------------------------------------


def _add_backend(p: argparse.ArgumentParser, default: str = "oracle") -> None:
    p.add_argument("--backend", choices=BACKENDS, default=default, help="simulation decision procedure")
    p.add_argument("--solver", metavar="PATH", help="SMT-LIB2 solver executable (default: $DIAGTA_SOLVER or z3)")
    p.add_argument("--solver-args", metavar="ARGS", help="extra solver arguments, shell-quoted")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="diagta", description="Reachability for timed automata with diagonal guards.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="is an accepting state reachable?")
    p.add_argument("model", help="automaton file")
    p.add_argument("--prune", choices=PRUNE_MODES, default="lu-d")
    p.add_argument("--order", choices=ORDERS, default="bfs")
    p.add_argument("--budget", type=int, default=100_000, help="maximum number of stored nodes")
    p.add_argument("--compare", choices=("diag-free",), help="also run the diagonal-free translation")
    p.add_argument("--json", action="store_true")
    _add_backend(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("sim", help="is zone Z simulated by zone Z'?")
    p.add_argument("zone")
    p.add_argument("zone2")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--lu", metavar="FILE", help="LU bounds file")
    g.add_argument("--m", "--uniform-m", dest="m", type=int, metavar="M", help="uniform bound M")
    p.add_argument("--json", action="store_true")
    _add_backend(p)
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("gen-hardness", help="zone pair for a 3-CNF formula")
    p.add_argument("cnf", nargs="?", help="DIMACS file; omit to draw a random formula")
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--verify", action="store_true", help="compare SAT with non-simulation")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--vars", type=int, default=4)
    p.add_argument("--clauses", type=int)
    _add_backend(p)
    p.set_defaults(func=cmd_gen_hardness)

    p = sub.add_parser("convert-df", help="write the equivalent diagonal-free automaton")
    p.add_argument("model")
    p.add_argument("--out", help="output file (default: stdout)")
    p.set_defaults(func=cmd_convert_df)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "budget", 1) <= 0:
        print("error: --budget must be positive", file=sys.stderr)
        return EXIT_ERROR
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
    except (UsageError, SolverError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
