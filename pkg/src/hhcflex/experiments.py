"""Classic-vs-flexible comparison and the endpoint-flag sensitivity sweep."""
from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field

import numpy as np

from .core import CLASSIC, FLEXIBLE, Endpoint, Instance, check_mode
from .exact import SearchLimits, SolveOutcome, solve_bnb, solve_bruteforce
from .exceptions import InvalidArgumentError
from .heuristic import HeuristicConfig, solve_heuristic
from .solution_io import render_route
from .validate import validate

SOLVERS = ("exact", "heuristic", "bruteforce")
VARIANTS = {
    "none": ("None", 0, 0),
    "start_lab": ("Needs to start from lab", 1, 0),
    "end_lab": ("Needs to end at lab", 0, 1),
}


@dataclass(frozen=True)
class SolverOptions:
    solver: str = "exact"
    time_limit: float = 300.0
    node_limit: int = 50_000_000
    seed: int = 0
    strict_all_nurses: bool = False
    threads: int = 1

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise InvalidArgumentError(f"solver must be one of {SOLVERS}, got {self.solver!r}")
        if self.threads < 1:
            raise InvalidArgumentError("threads must be at least 1")


def run_solver(instance: Instance, mode: str, options: SolverOptions = SolverOptions()) -> SolveOutcome:
    check_mode(mode)
    strict = options.strict_all_nurses
    if options.solver == "heuristic":
        return solve_heuristic(instance, mode, HeuristicConfig(seed=options.seed), strict)
    if options.solver == "bruteforce":
        return solve_bruteforce(instance, mode, strict)
    limits = SearchLimits(options.time_limit, options.node_limit)
    return solve_bnb(instance, mode, limits, strict, threads=options.threads)


def _certify(instance, mode, outcome, strict):
    if outcome.solution is not None:
        report = validate(instance, outcome.solution, mode, strict)
        if not report.ok:
            raise AssertionError(f"solver returned an invalid solution:\n{report}")


def fmt_objective(value: float | None) -> str:
    return "infeasible" if value is None else f"{value:.3f}"


def nurse_list(nurses) -> str:
    return ", ".join(f"Nurse{k + 1}" for k in nurses)


# --------------------------------------------------------------------------
# compare
# --------------------------------------------------------------------------

@dataclass
class ComparisonReport:
    instance: Instance
    outcomes: dict[str, SolveOutcome]
    wall: dict[str, float]

    def objective(self, mode) -> float | None:
        sol = self.outcomes[mode].solution
        return None if sol is None else sol.objective

    def renderings(self, mode) -> list[str]:
        sol = self.outcomes[mode].solution
        if sol is None:
            return []
        return [render_route(r) for r in sol.routes]

    def changed_nurses(self) -> list[int]:
        """Nurses whose set of visited patients differs between the modes."""
        a, b = self.outcomes[CLASSIC].solution, self.outcomes[FLEXIBLE].solution
        if a is None or b is None:
            return []
        out = []
        for ra, rb in zip(a.routes, b.routes):
            if {v.task.patient for v in ra.visits} != {v.task.patient for v in rb.visits}:
                out.append(ra.nurse)
        return out

    def endpoint_changes(self) -> list[tuple[int, str, str, str]]:
        """(nurse, side, classic endpoint, flexible endpoint) for every change."""
        a, b = self.outcomes[CLASSIC].solution, self.outcomes[FLEXIBLE].solution
        if a is None or b is None:
            return []
        out = []
        for ra, rb in zip(a.routes, b.routes):
            for side in ("start", "end"):
                ea, eb = getattr(ra, side), getattr(rb, side)
                if ea != eb:
                    out.append((ra.nurse, side, ea.value, eb.value))
        return out

    def table_rows(self, timing: bool = True) -> list[list[str]]:
        V = self.instance.num_nurses
        header = (["Model", "Status", "Optimal function value"]
                  + [f"Nurse{k + 1}" for k in range(V)]
                  + ["Nurses with changed patients", "Computational time (seconds)"])
        rows = [header]
        for mode, label in ((CLASSIC, "classic"), (FLEXIBLE, "flexible")):
            out = self.outcomes[mode]
            routes = self.renderings(mode) or [""] * V
            changed = nurse_list(self.changed_nurses()) if mode == FLEXIBLE else ""
            rows.append([label, out.status, fmt_objective(self.objective(mode))] + routes
                        + [changed, f"{self.wall[mode]:.2f}" if timing else ""])
        return rows

    def summary(self) -> str:
        lines = []
        for mode in (CLASSIC, FLEXIBLE):
            lines.append(f"{mode}: {self.outcomes[mode].status}, objective "
                         f"{fmt_objective(self.objective(mode))}")
            for k, text in enumerate(self.renderings(mode)):
                lines.append(f"  Nurse{k + 1}  {text}")
        for k, side, ea, eb in self.endpoint_changes():
            lines.append(f"Nurse{k + 1} {side} changes {ea} -> {eb}")
        changed = self.changed_nurses()
        lines.append("nurses with changed patients: " + (nurse_list(changed) or "none"))
        return "\n".join(lines)


def compare(instance: Instance, options: SolverOptions = SolverOptions()) -> ComparisonReport:
    outcomes, wall = {}, {}
    for mode in (CLASSIC, FLEXIBLE):
        t0 = time.perf_counter()
        outcomes[mode] = run_solver(instance, mode, options)
        wall[mode] = time.perf_counter() - t0
        _certify(instance, mode, outcomes[mode], options.strict_all_nurses)
    return ComparisonReport(instance, outcomes, wall)


# --------------------------------------------------------------------------
# sweep
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepSpec:
    """Sensitivity protocol on one service's endpoint flags.

    ``target_service`` is numbered from 1 as in printed tables.
    """

    instance: Instance
    target_service: int
    variants: tuple[str, ...] = ("none", "start_lab", "end_lab")
    solver: str = "exact"

    def __post_init__(self):
        variants = tuple(self.variants)
        if not variants:
            raise InvalidArgumentError("at least one variant is required")
        unknown = [v for v in variants if v not in VARIANTS]
        if unknown:
            raise InvalidArgumentError(f"unknown variants {unknown}; choose from {list(VARIANTS)}")
        if not 1 <= self.target_service <= self.instance.num_services:
            raise InvalidArgumentError(
                f"target service must lie in 1..{self.instance.num_services}, got {self.target_service}")
        if self.solver not in ("exact", "heuristic"):
            raise InvalidArgumentError("sweep solver must be 'exact' or 'heuristic'")
        object.__setattr__(self, "variants", variants)


def apply_variant(instance: Instance, service: int, variant: str) -> Instance:
    """Copy of ``instance`` with the flags of 1-based ``service`` overwritten."""
    _, start, end = VARIANTS[variant]
    s = service - 1
    start_req = np.array(instance.start_req)
    end_req = np.array(instance.end_req)
    start_req[s], end_req[s] = start, end
    return instance.replace(start_req=start_req, end_req=end_req)


@dataclass
class SweepRow:
    number: int
    variant: str
    instance: Instance
    outcome: SolveOutcome
    wall: float
    changed: list[int] = field(default_factory=list)

    @property
    def objective(self) -> float | None:
        return None if self.outcome.solution is None else self.outcome.solution.objective

    def endpoint_nurses(self, side: str, where: Endpoint) -> list[int]:
        if self.outcome.solution is None:
            return []
        return [r.nurse for r in self.outcome.solution.routes if getattr(r, side) is where]


def sweep(spec: SweepSpec, options: SolverOptions | None = None) -> list[SweepRow]:
    opts = options or SolverOptions(solver=spec.solver)
    if opts.solver != spec.solver:
        opts = SolverOptions(spec.solver, opts.time_limit, opts.node_limit, opts.seed,
                             opts.strict_all_nurses, opts.threads)
    rows = []
    for n, variant in enumerate(spec.variants, 1):
        inst = apply_variant(spec.instance, spec.target_service, variant)
        t0 = time.perf_counter()
        outcome = run_solver(inst, FLEXIBLE, opts)
        wall = time.perf_counter() - t0
        _certify(inst, FLEXIBLE, outcome, opts.strict_all_nurses)
        rows.append(SweepRow(n, variant, inst, outcome, wall))
    base = next((r for r in rows if r.variant == "none"), None)
    if base is not None and base.outcome.solution is not None:
        ref = {r.nurse: (r.start, r.end) for r in base.outcome.solution.routes}
        for row in rows:
            if row.outcome.solution is not None:
                row.changed = [r.nurse for r in row.outcome.solution.routes
                               if (r.start, r.end) != ref[r.nurse]]
    return rows


def sweep_table(rows: list[SweepRow], spec: SweepSpec, timing: bool = True) -> list[list[str]]:
    V = spec.instance.num_nurses
    header = ["Experiment number", "Number of patients", f"Feature of service #{spec.target_service}",
              "Status", "Optimal function value",
              "Nurses with starting point of depot", "Nurses with starting point of laboratory",
              "Nurses with ending point of depot", "Nurses with ending point of laboratory",
              "Nurses with changed endpoints", "Computational time (second)"]
    header += [f"Route of nurse #{k + 1}" for k in range(V)]
    out = [header]
    for row in rows:
        sol = row.outcome.solution
        routes = [render_route(r) for r in sol.routes] if sol is not None else [""] * V
        out.append([
            f"#{row.number}", str(spec.instance.num_patients), VARIANTS[row.variant][0],
            row.outcome.status, fmt_objective(row.objective),
            nurse_list(row.endpoint_nurses("start", Endpoint.DEPOT)),
            nurse_list(row.endpoint_nurses("start", Endpoint.LAB)),
            nurse_list(row.endpoint_nurses("end", Endpoint.DEPOT)),
            nurse_list(row.endpoint_nurses("end", Endpoint.LAB)),
            nurse_list(row.changed),
            f"{row.wall:.2f}" if timing else "",
        ] + routes)
    return out


def to_csv(rows: list[list[str]]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()

