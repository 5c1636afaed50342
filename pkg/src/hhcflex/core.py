"""Domain types, endpoint rule and objective evaluation.

Node numbering follows the travel-time matrix: 0 is the depot, 1..n are
patients and n+1 is the laboratory.  Services and nurses are 0-based
internally; anything shown to a person (renderings, MILP tags) is 1-based.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .exceptions import InvalidArgumentError, SchemaError

FLEXIBLE = "flexible"
CLASSIC = "classic"
MODES = (FLEXIBLE, CLASSIC)


class Endpoint(str, enum.Enum):
    DEPOT = "Depot"
    LAB = "Lab"

    @property
    def short(self) -> str:
        return "D" if self is Endpoint.DEPOT else "L"


def _frozen(values, dtype, name):
    try:
        arr = np.array(values, dtype=dtype)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"field {name}: not a numeric array ({exc})") from None
    arr.setflags(write=False)
    return arr


def _binary(values, name):
    try:
        arr = np.asarray(values)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"field {name}: not a numeric array ({exc})") from None
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise SchemaError(f"field {name}: entries must be 0 or 1")
    return _frozen(arr, np.int8, name)


@dataclass(frozen=True, eq=False)
class Instance:
    """A complete problem datum.

    Array fields are stored as read-only numpy arrays so an instance can be
    shared freely.  Structural invariants are checked on construction;
    qualification coverage is reported by :meth:`uncovered_demands` and
    enforced by the solvers and the file reader.
    """

    name: str
    num_patients: int
    num_nurses: int
    num_services: int
    travel_time: np.ndarray
    service_duration: np.ndarray
    window_lo: np.ndarray
    window_hi: np.ndarray
    qualification: np.ndarray
    demand: np.ndarray
    start_req: np.ndarray
    end_req: np.ndarray

    def __post_init__(self):
        n, V, S = self.num_patients, self.num_nurses, self.num_services
        for key, value in (("num_patients", n), ("num_nurses", V), ("num_services", S)):
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
                raise SchemaError(f"field {key}: must be a positive integer, got {value!r}")
        set_ = object.__setattr__
        set_(self, "num_patients", int(n))
        set_(self, "num_nurses", int(V))
        set_(self, "num_services", int(S))
        set_(self, "name", str(self.name))
        set_(self, "travel_time", _frozen(self.travel_time, float, "travel_time"))
        set_(self, "service_duration", _frozen(self.service_duration, float, "service_duration"))
        set_(self, "window_lo", _frozen(self.window_lo, float, "window_lo"))
        set_(self, "window_hi", _frozen(self.window_hi, float, "window_hi"))
        set_(self, "qualification", _binary(self.qualification, "qualification"))
        set_(self, "demand", _binary(self.demand, "demand"))
        set_(self, "start_req", _binary(self.start_req, "start_req"))
        set_(self, "end_req", _binary(self.end_req, "end_req"))

        shapes = {
            "travel_time": (n + 2, n + 2),
            "service_duration": (n, S),
            "window_lo": (n,),
            "window_hi": (n,),
            "qualification": (V, S),
            "demand": (n, S),
            "start_req": (S,),
            "end_req": (S,),
        }
        for key, shape in shapes.items():
            got = getattr(self, key).shape
            if got != shape:
                raise SchemaError(f"field {key}: expected shape {shape}, got {got}")

        tt = self.travel_time
        if not np.isfinite(tt).all() or (tt < 0).any():
            raise SchemaError("field travel_time: entries must be finite and >= 0")
        if np.diagonal(tt).any():
            raise SchemaError("field travel_time: diagonal must be zero")
        sd = self.service_duration
        if not np.isfinite(sd).all() or (sd < 0).any():
            raise SchemaError("field service_duration: entries must be finite and >= 0")
        for key in ("window_lo", "window_hi"):
            if not np.isfinite(getattr(self, key)).all():
                raise SchemaError(f"field {key}: entries must be finite")
        bad = np.flatnonzero(self.window_lo > self.window_hi)
        if bad.size:
            i = int(bad[0]) + 1
            raise SchemaError(f"window_lo > window_hi for patient {i}")

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, f), getattr(other, f))
            if isinstance(getattr(self, f), np.ndarray)
            else getattr(self, f) == getattr(other, f)
            for f in self.__dataclass_fields__
        )

    __hash__ = None

    def replace(self, **changes) -> "Instance":
        return replace(self, **changes)

    @property
    def depot(self) -> int:
        return 0

    @property
    def lab(self) -> int:
        return self.num_patients + 1

    def node(self, endpoint: Endpoint) -> int:
        return self.lab if endpoint is Endpoint.LAB else 0

    def uncovered_demands(self) -> list[tuple[int, int]]:
        """(patient, service) pairs demanded but held by no nurse."""
        covered = self.qualification.any(axis=0)
        rows, cols = np.nonzero(self.demand & ~covered[None, :])
        return [(int(i) + 1, int(s)) for i, s in zip(rows, cols)]

    @cached_property
    def tasks(self) -> tuple["Task", ...]:
        return tuple(expand_tasks(self))

    @cached_property
    def task_ids(self) -> dict[tuple[int, int], int]:
        return {(t.patient, t.service): k for k, t in enumerate(self.tasks)}


class Task(NamedTuple):
    """One demanded (patient, service) pair."""

    patient: int
    service: int
    duration: float
    window: tuple[float, float]

    @property
    def key(self) -> tuple[int, int]:
        return (self.patient, self.service)

    def label(self) -> str:
        return f"S{self.service + 1}:{self.patient}"


class Visit(NamedTuple):
    task: Task
    start_time: float


@dataclass(frozen=True)
class Route:
    nurse: int
    start: Endpoint | None
    end: Endpoint | None
    visits: tuple[Visit, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "visits", tuple(self.visits))

    @property
    def tasks(self) -> tuple[Task, ...]:
        return tuple(v.task for v in self.visits)

    @property
    def services(self) -> set[int]:
        return {v.task.service for v in self.visits}

    def __len__(self):
        return len(self.visits)


@dataclass(frozen=True)
class Solution:
    routes: tuple[Route, ...]
    objective: float = field(default=0.0)

    def __post_init__(self):
        object.__setattr__(self, "routes", tuple(self.routes))

    def sort_key(self, instance: Instance) -> tuple:
        """Tie-break key: per nurse, the sequence of task ids."""
        ids = instance.task_ids
        return tuple(tuple(ids[v.task.key] for v in r.visits) for r in self.routes)


def expand_tasks(instance: Instance) -> list[Task]:
    """All demanded (patient, service) pairs, ordered by patient then service."""
    out = []
    for i, s in zip(*np.nonzero(instance.demand)):
        p = int(i) + 1
        out.append(Task(
            p,
            int(s),
            float(instance.service_duration[i, s]),
            (float(instance.window_lo[i]), float(instance.window_hi[i])),
        ))
    return out


def endpoint_requirements(services: Iterable[int], instance: Instance) -> tuple[Endpoint, Endpoint]:
    """Start and end endpoint forced by the services a route carries.

    An empty route starts and ends at the depot.
    """
    start = end = Endpoint.DEPOT
    for s in services:
        if not 0 <= s < instance.num_services:
            raise InvalidArgumentError(f"service index {s} out of range")
        if instance.start_req[s]:
            start = Endpoint.LAB
        if instance.end_req[s]:
            end = Endpoint.LAB
    return start, end


def route_endpoints(services: Iterable[int], instance: Instance, mode: str) -> tuple[Endpoint, Endpoint]:
    if mode == CLASSIC:
        return Endpoint.DEPOT, Endpoint.DEPOT
    return endpoint_requirements(services, instance)


def check_mode(mode: str) -> str:
    if mode not in MODES:
        raise InvalidArgumentError(f"mode must be one of {MODES}, got {mode!r}")
    return mode


def route_travel(instance: Instance, start: Endpoint | None, end: Endpoint | None,
                 patients: Sequence[int]) -> float:
    """Travel time of one route; open sides contribute nothing."""
    if not patients:
        return 0.0
    tt = instance.travel_time
    total = 0.0
    if start is not None:
        total += tt[instance.node(start), patients[0]]
    for a, b in zip(patients, patients[1:]):
        total += tt[a, b]
    if end is not None:
        total += tt[patients[-1], instance.node(end)]
    return float(total)


def objective(instance: Instance, solution: Solution) -> float:
    """Total travel time of all routes of ``solution``."""
    ids = instance.task_ids
    total = 0.0
    for route in solution.routes:
        for v in route.visits:
            if v.task.key not in ids:
                raise InvalidArgumentError(f"task {v.task.key} is not demanded by the instance")
        total += route_travel(instance, route.start, route.end, [v.task.patient for v in route.visits])
    return total


def earliest_start_times(instance: Instance, origin: int, tasks: Sequence[Task]) -> list[float] | None:
    """Forward time propagation from ``origin`` departing at time 0.

    Arriving early means waiting until the window opens; arriving after it
    closes makes the sequence infeasible (``None``).
    """
    tt = instance.travel_time
    times = []
    now = 0.0
    here = origin
    for task in tasks:
        lo, hi = task.window
        arrive = now + tt[here, task.patient]
        begin = arrive if arrive > lo else lo
        if begin > hi:
            return None
        times.append(float(begin))
        now = begin + task.duration
        here = task.patient
    return times


def make_route(instance: Instance, nurse: int, tasks: Sequence[Task], mode: str = FLEXIBLE) -> Route | None:
    """Route with forced endpoints and earliest start times, or ``None`` if infeasible."""
    start, end = route_endpoints((t.service for t in tasks), instance, mode)
    times = earliest_start_times(instance, instance.node(start), tasks)
    if times is None:
        return None
    return Route(nurse, start, end, tuple(Visit(t, s) for t, s in zip(tasks, times)))


def make_solution(instance: Instance, routes: Sequence[Route]) -> Solution:
    sol = Solution(tuple(routes))
    return Solution(sol.routes, objective(instance, sol))
