"""Command-line entry point: ``hhcflex <command> [options]``.

Exit codes: 0 success, 1 infeasible instance or invalid solution,
2 usage or input errors.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .core import FLEXIBLE, MODES
from .exact import INFEASIBLE
from .exceptions import HHCError
from .experiments import (
    SOLVERS, VARIANTS, SolverOptions, SweepSpec, compare, fmt_objective, run_solver,
    sweep, sweep_table, to_csv,
)
from .instances import SIZE_CLASSES, GenConfig, generate, read_instance, write_instance
from .milp import build_milp, dumps_lp
from .solution_io import read_solution, render_route, write_solution
from .validate import validate

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _u64(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def _positive(kind):
    def parse(text):
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
        if value <= 0:
            raise argparse.ArgumentTypeError("must be positive")
        return value
    return parse


def _solver_flags(p, solvers=SOLVERS, default="exact"):
    p.add_argument("--solver", choices=solvers, default=default)
    p.add_argument("--seed", type=_u64, default=0, help="heuristic seed")
    p.add_argument("--time-limit", type=_positive(float), default=300.0, metavar="SECONDS")
    p.add_argument("--node-limit", type=_positive(int), default=50_000_000)
    p.add_argument("--threads", type=_positive(int), default=1)
    p.add_argument("--strict-all-nurses", action="store_true",
                   help="every nurse must leave the depot or lab (no idle nurses)")


def _options(args) -> SolverOptions:
    return SolverOptions(args.solver, args.time_limit, args.node_limit, args.seed,
                         args.strict_all_nurses, args.threads)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hhcflex", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random instance")
    p.add_argument("--size", choices=sorted(SIZE_CLASSES), default="small")
    p.add_argument("--patients", type=_positive(int))
    p.add_argument("--nurses", type=_positive(int))
    p.add_argument("--services", type=_positive(int))
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--demand-density", type=float)
    p.add_argument("--qualification-density", type=float)
    p.add_argument("--window-width", type=float)
    p.add_argument("--horizon", type=float)
    p.add_argument("--name")
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("solve", help="solve an instance and write a solution file")
    p.add_argument("--instance", required=True, type=Path)
    p.add_argument("--mode", choices=MODES, default=FLEXIBLE)
    p.add_argument("--out", type=Path)
    _solver_flags(p)

    p = sub.add_parser("validate", help="check a solution file against an instance")
    p.add_argument("--instance", required=True, type=Path)
    p.add_argument("--solution", required=True, type=Path)
    p.add_argument("--mode", choices=MODES, help="defaults to the mode stored in the file")
    p.add_argument("--strict-all-nurses", action="store_true")

    p = sub.add_parser("export-lp", help="write the mixed-integer model in LP format")
    p.add_argument("--instance", required=True, type=Path)
    p.add_argument("--mode", choices=MODES, default=FLEXIBLE)
    p.add_argument("--strict-all-nurses", action="store_true")
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("compare", help="solve in classic and flexible mode side by side")
    p.add_argument("--instance", required=True, type=Path)
    p.add_argument("--out", type=Path, help="CSV table")
    p.add_argument("--no-timing", action="store_true", help="leave the time column empty")
    _solver_flags(p)

    p = sub.add_parser("sweep", help="vary one service's lab flags and re-solve")
    p.add_argument("--instance", required=True, type=Path)
    p.add_argument("--target-service", required=True, type=int, help="service number, from 1")
    p.add_argument("--variants", default="none,start_lab,end_lab",
                   help=f"comma-separated subset of {','.join(VARIANTS)}")
    p.add_argument("--out", type=Path, help="CSV table")
    p.add_argument("--solutions-dir", type=Path, help="write each variant's instance and solution")
    p.add_argument("--no-timing", action="store_true", help="leave the time column empty")
    _solver_flags(p, solvers=("exact", "heuristic"))
    return parser


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def cmd_gen(args) -> int:
    overrides = {k: v for k, v in {
        "demand_density": args.demand_density,
        "qualification_density": args.qualification_density,
        "window_width": args.window_width,
        "horizon": args.horizon,
        "name": args.name,
    }.items() if v is not None}
    config = GenConfig.for_class(args.size, seed=args.seed, **overrides)
    dims = {k: v for k, v in (("num_patients", args.patients), ("num_nurses", args.nurses),
                              ("num_services", args.services)) if v is not None}
    if dims:
        from dataclasses import asdict
        fields = asdict(config)
        fields.update(dims)
        if "num_services" in dims:
            fields["start_req"] = fields["end_req"] = None
        config = GenConfig(**fields)
    instance = generate(config)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_instance(instance, args.out)
    print(f"wrote {args.out} ({len(instance.tasks)} tasks)")
    return EXIT_OK


def cmd_solve(args) -> int:
    instance = read_instance(args.instance)
    outcome = run_solver(instance, args.mode, _options(args))
    print(f"status: {outcome.status}")
    if outcome.solution is None:
        return EXIT_FAIL
    report = validate(instance, outcome.solution, args.mode, args.strict_all_nurses)
    if not report.ok:
        print(report, file=sys.stderr)
        return EXIT_FAIL
    print(f"objective: {fmt_objective(outcome.solution.objective)}")
    for r in outcome.solution.routes:
        print(f"Nurse{r.nurse + 1}  {render_route(r)}")
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        write_solution(outcome.solution, args.out, args.mode, instance.name)
    return EXIT_OK


def cmd_validate(args) -> int:
    instance = read_instance(args.instance)
    solution, stored_mode = read_solution(args.solution, instance)
    mode = args.mode or stored_mode or FLEXIBLE
    if mode not in MODES:
        raise HHCError(f"solution file has unknown mode {mode!r}")
    report = validate(instance, solution, mode, args.strict_all_nurses)
    if report.ok:
        print(f"ok: objective {fmt_objective(solution.objective)}")
        return EXIT_OK
    print(report)
    print("tags: " + " ".join(sorted(report.tags)))
    return EXIT_FAIL


def cmd_export_lp(args) -> int:
    instance = read_instance(args.instance)
    model, _ = build_milp(instance, args.mode, args.strict_all_nurses)
    _write(args.out, dumps_lp(model))
    stats = model.stats()
    print(f"wrote {args.out} ({stats['rows']} rows, {stats['columns']} columns)")
    return EXIT_OK


def cmd_compare(args) -> int:
    instance = read_instance(args.instance)
    report = compare(instance, _options(args))
    print(report.summary())
    if args.out:
        _write(args.out, to_csv(report.table_rows(timing=not args.no_timing)))
    infeasible = any(o.solution is None for o in report.outcomes.values())
    return EXIT_FAIL if infeasible else EXIT_OK


def cmd_sweep(args) -> int:
    instance = read_instance(args.instance)
    variants = tuple(v.strip() for v in args.variants.split(",") if v.strip())
    spec = SweepSpec(instance, args.target_service, variants, args.solver)
    rows = sweep(spec, _options(args))
    table = sweep_table(rows, spec, timing=not args.no_timing)
    text = to_csv(table)
    print(text, end="")
    if args.out:
        _write(args.out, text)
    if args.solutions_dir:
        args.solutions_dir.mkdir(parents=True, exist_ok=True)
        for row in rows:
            write_instance(row.instance, args.solutions_dir / f"{row.variant}.instance.json")
            if row.outcome.solution is not None:
                write_solution(row.outcome.solution, args.solutions_dir / f"{row.variant}.solution.json",
                    FLEXIBLE, row.instance.name)
    return EXIT_FAIL if all(r.outcome.status == INFEASIBLE for r in rows) else EXIT_OK


COMMANDS = {
    "gen": cmd_gen, "solve": cmd_solve, "validate": cmd_validate,
    "export-lp": cmd_export_lp, "compare": cmd_compare, "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (HHCError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
