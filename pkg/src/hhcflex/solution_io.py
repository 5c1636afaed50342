"""Solution files (JSON) and the arrow rendering of routes.

Nurse and service numbers in files and renderings are 1-based, matching
how people read them (``Nurse 1``, ``S6:9``); start times keep full
precision.
"""
from __future__ import annotations

import json
import math
import re
from pathlib import Path

from .core import Endpoint, Instance, Route, Solution, Task, Visit, make_solution
from .exceptions import ParseError

ARROW = " → "


def _task_for(instance: Instance, patient: int, service: int) -> Task:
    """The instance's task, or a stand-in the validator will flag."""
    key = (patient, service)
    j = instance.task_ids.get(key)
    if j is not None:
        return instance.tasks[j]
    return Task(patient, service, 0.0, (-math.inf, math.inf))


def solution_to_dict(solution: Solution, mode: str, instance_name: str | None = None) -> dict:
    routes = []
    for r in solution.routes:
        routes.append({
            "nurse": r.nurse + 1,
            "start": r.start.value if r.start is not None else None,
            "end": r.end.value if r.end is not None else None,
            "visits": [{"patient": v.task.patient, "service": v.task.service + 1,
                        "start_time": float(v.start_time)} for v in r.visits],
        })
    out = {"mode": mode, "objective": float(solution.objective), "routes": routes}
    if instance_name is not None:
        out = {"instance": instance_name, **out}
    return out


def _endpoint(value, where):
    if value is None:
        return None
    try:
        return Endpoint(value)
    except ValueError:
        raise ParseError(f"{where}: endpoint must be 'Depot' or 'Lab', got {value!r}") from None


def _number(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"{where}: expected a number, got {value!r}")
    return value


def solution_from_dict(data, instance: Instance) -> tuple[Solution, str | None]:
    """Decode a solution document; the objective is taken as written."""
    if not isinstance(data, dict) or not isinstance(data.get("routes"), list):
        raise ParseError("solution document needs a 'routes' list")
    routes = []
    for n, item in enumerate(data["routes"]):
        where = f"routes[{n}]"
        if not isinstance(item, dict):
            raise ParseError(f"{where}: expected an object")
        nurse = _number(item.get("nurse"), f"{where}.nurse")
        visits = []
        for m, v in enumerate(item.get("visits", [])):
            vw = f"{where}.visits[{m}]"
            if not isinstance(v, dict):
                raise ParseError(f"{vw}: expected an object")
            patient = int(_number(v.get("patient"), f"{vw}.patient"))
            service = int(_number(v.get("service"), f"{vw}.service")) - 1
            start = float(_number(v.get("start_time"), f"{vw}.start_time"))
            visits.append(Visit(_task_for(instance, patient, service), start))
        routes.append(Route(int(nurse) - 1, _endpoint(item.get("start"), f"{where}.start"),
                            _endpoint(item.get("end"), f"{where}.end"), tuple(visits)))
    objective = float(_number(data.get("objective"), "objective"))
    mode = data.get("mode")
    return Solution(tuple(routes), objective), mode


def dumps_solution(solution: Solution, mode: str, instance_name: str | None = None) -> str:
    return json.dumps(solution_to_dict(solution, mode, instance_name), indent=1) + "\n"


def write_solution(solution: Solution, path, mode: str, instance_name: str | None = None) -> None:
    Path(path).write_text(dumps_solution(solution, mode, instance_name), encoding="utf-8")


def read_solution(path, instance: Instance) -> tuple[Solution, str | None]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from None
    return solution_from_dict(data, instance)


# --------------------------------------------------------------------------
# Arrow rendering: "Depot → S6:9 → S3:2 → Lab"
# --------------------------------------------------------------------------

def render_route(route: Route) -> str:
    parts = [route.start.value if route.start else "?"]
    parts += [v.task.label() for v in route.visits]
    parts.append(route.end.value if route.end else "?")
    return ARROW.join(parts)


_STEP = re.compile(r"^S(\d+):(\d+)$")


def parse_route(text: str, instance: Instance, nurse: int) -> Route:
    """Inverse of :func:`render_route`; start times are recomputed as earliest."""
    from .core import earliest_start_times

    parts = [p.strip() for p in re.split(r"\s*(?:→|->)\s*", text.strip())]
    if len(parts) < 2:
        raise ParseError(f"route {text!r} needs a start and an end endpoint")
    start = _endpoint(parts[0], "route start")
    end = _endpoint(parts[-1], "route end")
    tasks = []
    for step in parts[1:-1]:
        m = _STEP.match(step)
        if m is None:
            raise ParseError(f"cannot read route step {step!r}; expected S<service>:<patient>")
        tasks.append(_task_for(instance, int(m.group(2)), int(m.group(1)) - 1))
    times = None
    if all(t.key in instance.task_ids for t in tasks):
        times = earliest_start_times(instance, instance.node(start), tasks)
    if times is None:
        times = [t.window[0] for t in tasks]
    return Route(nurse, start, end, tuple(Visit(t, s) for t, s in zip(tasks, times)))


def parse_routes(lines, instance: Instance) -> Solution:
    """One rendering per nurse, in nurse order."""
    routes = [parse_route(line, instance, k) for k, line in enumerate(lines)]
    return make_solution(instance, routes)
