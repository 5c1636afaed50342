"""Solution validator with constraint-tagged violations.

Tags name the model constraint a solution breaks (``C2`` .. ``C16``) plus
``OBJ`` (reported objective disagrees with the recomputed one),
``PARTITION`` (a visit references a task the instance does not demand)
and ``QUAL`` (a route names a nurse that does not exist).

Endpoint checks follow the linearised model.  The indicator a route
declares is read from its start/end; the indicator the services force is
compared against it (C2, C7), then the number of departures from and
arrivals at each endpoint is checked against the forced indicator
(C3-C6, C8-C11).  An empty depot-to-depot route is the zero-cost idle leg
and counts as one depot departure and arrival unless all nurses must work.
"""
from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field

from .core import (
    CLASSIC, FLEXIBLE, Endpoint, Instance, Solution, check_mode, route_travel,
)

TAGS = tuple(f"C{k}" for k in range(2, 17)) + ("OBJ", "PARTITION", "QUAL")


@dataclass(frozen=True)
class Violation:
    tag: str
    detail: str
    nurse: int | None = None
    task: tuple[int, int] | None = None

    def __str__(self):
        where = []
        if self.nurse is not None:
            where.append(f"nurse {self.nurse + 1}")
        if self.task is not None:
            where.append(f"task S{self.task[1] + 1}:{self.task[0]}")
        suffix = f" [{', '.join(where)}]" if where else ""
        return f"{self.tag}: {self.detail}{suffix}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def tags(self) -> set[str]:
        return {v.tag for v in self.violations}

    def add(self, tag, detail, nurse=None, task=None):
        self.violations.append(Violation(tag, detail, nurse, task))

    def __bool__(self):
        return self.ok

    def __str__(self):
        if self.ok:
            return "ok"
        return "\n".join(str(v) for v in self.violations)


def validate(instance: Instance, solution: Solution, mode: str = FLEXIBLE,
             strict_all_nurses: bool = False, tol: float = 1e-9) -> ValidationReport:
    """Check every model constraint and list all violations found."""
    check_mode(mode)
    report = ValidationReport()
    ids = instance.task_ids
    tt = instance.travel_time
    V = instance.num_nurses

    served = Counter()
    by_nurse = defaultdict(list)
    for r_idx, route in enumerate(solution.routes):
        if not isinstance(route.nurse, int) or not 0 <= route.nurse < V:
            report.add("QUAL", f"route {r_idx} references unknown nurse {route.nurse!r}")
            continue
        k = route.nurse
        by_nurse[k].append(route)

        here = instance.node(route.start) if route.start is not None else None
        ready = 0.0
        for visit in route.visits:
            task = visit.task
            if task.key not in ids:
                report.add("PARTITION", "visit references a task the instance does not demand",
                           k, task.key)
                here = None
                continue
            # Durations and windows always come from the instance.
            task = instance.tasks[ids[task.key]]
            served[task.key] += 1
            if not instance.qualification[k, task.service]:
                report.add("C16", "nurse lacks the qualification for this service", k, task.key)
            lo, hi = task.window
            t = visit.start_time
            if t < lo - tol or t > hi + tol:
                report.add("C14", f"start time {t:g} outside window [{lo:g}, {hi:g}]", k, task.key)
            if here is not None:
                earliest = ready + tt[here, task.patient]
                if t < earliest - tol:
                    report.add("C13", f"start time {t:g} before earliest arrival {earliest:g}",
                               k, task.key)
            here = task.patient
            ready = t + task.duration

    for task in instance.tasks:
        count = served[task.key]
        if count != 1:
            what = "not served" if count == 0 else f"served {count} times"
            report.add("C15", f"demanded task {what}", task=task.key)

    for k in range(V):
        _check_endpoints(instance, k, by_nurse.get(k, []), mode, strict_all_nurses, report)

    recomputed = 0.0
    for route in solution.routes:
        patients = [v.task.patient for v in route.visits
                    if 1 <= v.task.patient <= instance.num_patients]
        recomputed += route_travel(instance, route.start, route.end, patients)
    if abs(recomputed - solution.objective) > tol:
        report.add("OBJ", f"reported objective {solution.objective!r} != recomputed {recomputed!r}")
    return report


def _check_endpoints(instance, k, routes, mode, strict, report):
    active = [r for r in routes if r.visits]
    services = {v.task.service for r in active for v in r.visits if 0 <= v.task.service < instance.num_services}
    if mode == CLASSIC:
        need_lab_start = need_lab_end = False
    else:
        need_lab_start = any(instance.start_req[s] for s in services)
        need_lab_end = any(instance.end_req[s] for s in services)

    sides = (
        ("start", "depart from", need_lab_start, ("C2", "C3", "C4", "C5", "C6")),
        ("end", "return to", need_lab_end, ("C7", "C8", "C9", "C10", "C11")),
    )
    for attr, verb, need_lab, (c_ind, c_dep_lo, c_dep_hi, c_lab_lo, c_lab_hi) in sides:
        opened = [r for r in routes if getattr(r, attr) is None]
        for r in opened:
            report.add("C12", f"route has no {attr} endpoint, so flow through its "
                       f"{'first' if attr == 'start' else 'last'} patient is not conserved", k)
        if opened:
            continue

        if mode == FLEXIBLE and routes:
            declared_lab = getattr(routes[0], attr) is Endpoint.LAB
            if declared_lab != need_lab:
                if need_lab:
                    detail = f"route carries a service that must {attr} at the lab but {attr}s at Depot"
                else:
                    detail = f"route {attr}s at the lab without a service requiring it"
                report.add(c_ind, detail, k)

        depot = lab = 0
        for r in routes:
            where = getattr(r, attr)
            if not r.visits:
                if r.start is Endpoint.DEPOT and r.end is Endpoint.DEPOT and not strict:
                    depot += 1
                continue
            if where is Endpoint.DEPOT:
                depot += 1
            else:
                lab += 1

        if not need_lab:
            if depot < 1:
                report.add(c_dep_lo, f"nurse does not {verb} the depot", k)
            elif depot + lab > 1:
                report.add(c_dep_hi, f"nurse has {depot + lab} route {attr}s, expected one", k)
        else:
            if lab < 1:
                report.add(c_lab_lo, f"nurse must {verb} the lab but does not", k)
            elif depot + lab > 1:
                report.add(c_lab_hi, f"nurse has {depot + lab} route {attr}s, expected one", k)
