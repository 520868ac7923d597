"""Command line entry point: ``hfmdvrp <command> ...``.

Exit codes: 0 success, 1 validation failure (bad input file, invalid
solution, failed run), 2 usage error. ``-`` stands for stdin/stdout.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import io as hio
from .baseline import IMPROVERS, BaselineConfig, solve_ancar
from .bench import ALGORITHMS, BenchError, ExperimentConfig, run_experiment
from .datagen import GenerationError, GenSpec, generate_instance, load_catalog, random_cvrp_base
from .domain import InfeasibleTaskError
from .model import Family, brute_force_optimum, validate_instance, validate_solution
from .scheduler import ALGORITHM as DONE
from .scheduler import SchedulerError, solve

EXIT_OK, EXIT_INVALID, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _read(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    try:
        return Path(path).read_bytes()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def _emit(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text, encoding="utf-8", newline="\n")
    except OSError as e:
        raise UsageError(f"cannot write {path}: {e.strerror}") from None


def _family(text: str) -> Family:
    try:
        return Family(text.upper())
    except ValueError:
        raise argparse.ArgumentTypeError(f"unknown family {text!r}; choose from XMT, RMT, WMT, SMT") from None


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def cmd_generate(args) -> int:
    if args.base is None:
        if args.tasks is None:
            raise UsageError("give a base instance file or --tasks")
        base = random_cvrp_base(args.tasks, args.robots or max(1, args.tasks // 8), args.seed)
    else:
        base = hio.parse_instance(_read(args.base))
    catalog = tuple(load_catalog(args.catalog))
    spec = GenSpec(base, args.family, args.seed, catalog=catalog, n_robots=args.robots if args.base else None)
    _emit(hio.write_instance(generate_instance(spec)), args.out)
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = hio.parse_instance(_read(args.instance))
    if args.algo == DONE:
        sol = solve(inst)
    else:
        sol = solve_ancar(inst, BaselineConfig(improver=args.improver))
    sol = replace(sol, seed=args.seed)
    _emit(hio.write_solution(sol), args.out)
    print(
        f"{sol.algorithm} {inst.name}: cost {sol.total_cost:.3f} s, "
        f"{sol.used_robots} robots, {sol.depot_visits} depot visits, {sol.wall_time:.3f} s wall",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_validate(args) -> int:
    inst = hio.parse_instance(_read(args.instance))
    report = validate_instance(inst)
    if report.ok and args.solution is not None:
        report = validate_solution(inst, hio.parse_solution(_read(args.solution)))
    for v in report:
        print(v)
    if report.ok:
        print("ok")
        return EXIT_OK
    return EXIT_INVALID


def cmd_oracle(args) -> int:
    inst = hio.parse_instance(_read(args.instance))
    try:
        sol = brute_force_optimum(inst)
    except ValueError as e:
        raise UsageError(str(e)) from None
    _emit(hio.write_solution(sol), args.out)
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.out is None:
        raise UsageError("bench needs --out DIR")
    algos = tuple(dict.fromkeys(args.algo)) if args.algo else ALGORITHMS
    for path in args.instances:
        if not Path(path).is_file():
            raise UsageError(f"cannot read {path}")
    cfg = ExperimentConfig(
        instances=args.instances,
        algorithms=algos,
        variations=args.variations,
        base_seed=args.seed,
        output=args.out,
        families=args.family or None,
        improver=args.improver,
    )
    result = run_experiment(cfg)
    sys.stdout.write(result.summary_csv())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hfmdvrp", description="Warehouse multi-robot routing: DoNe-CPTA and a-nCAR.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="derive an XMT/RMT/WMT/SMT instance from a base CVRP instance")
    g.add_argument("base", nargs="?", help="base CVRP instance file ('-' for stdin)")
    g.add_argument("--family", type=_family, required=True)
    g.add_argument("--seed", type=_seed, default=0)
    g.add_argument("--tasks", type=int, help="synthesize a random base with this many tasks")
    g.add_argument("--robots", type=int, help="fleet size (default: taken from the base)")
    g.add_argument("--catalog", help="robot catalog CSV (default: bundled)")
    g.add_argument("--out", help="output file (default stdout)")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="solve an instance and write the solution record")
    s.add_argument("instance")
    s.add_argument("--algo", choices=ALGORITHMS, default=DONE)
    s.add_argument("--improver", choices=IMPROVERS, default="2opt")
    s.add_argument("--seed", type=_seed, default=0, help="recorded in the solution")
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("validate", help="check an instance, and optionally a solution against it")
    v.add_argument("instance")
    v.add_argument("solution", nargs="?")
    v.set_defaults(func=cmd_validate)

    b = sub.add_parser("bench", help="run both solvers over seeded instance variations")
    b.add_argument("instances", nargs="+")
    b.add_argument("--algo", action="append", choices=ALGORITHMS)
    b.add_argument("--family", action="append", type=_family, help="generate this family from each base (repeatable)")
    b.add_argument("--variations", type=int, default=30)
    b.add_argument("--seed", type=_seed, default=0)
    b.add_argument("--improver", choices=IMPROVERS, default="2opt")
    b.add_argument("--out")
    b.set_defaults(func=cmd_bench)

    o = sub.add_parser("oracle", help="exact optimum of a tiny instance by enumeration")
    o.add_argument("instance")
    o.add_argument("--out")
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "variations", 1) < 1:
        parser.error("--variations must be >= 1")
    try:
        return args.func(args)
    except UsageError as e:
        print(f"hfmdvrp: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (hio.ParseError, GenerationError, InfeasibleTaskError, SchedulerError, BenchError) as e:
        print(f"hfmdvrp: {e}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as e:
        print(f"hfmdvrp: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
