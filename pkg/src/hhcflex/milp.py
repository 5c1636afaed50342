"""Mixed-integer model over the task-expanded graph, with LP-file export.

Nodes of the graph are the depot and the lab (each usable as route origin
and as terminal) plus one node per demanded (patient, service) task.
Tags use 1-based nurse and service numbers: ``x[D,3.2,1]`` is the arc from
the depot to service 2 of patient 3 for nurse 1, ``S[3,1,2]`` the start time
of that service, ``delta[1,1]``/``delta[1,2]`` nurse 1's lab-start and
lab-end indicators.  Rows carry the number of the constraint family they
implement (``C2_lo[1]``, ``C13[1.1,2.2,1]``, ``C15[1,1]``, ...).

Departures and returns are additionally pinned to one per nurse
(``ONE_OUT``/``ONE_IN``); without them the indicator rows leave the
inactive endpoint unconstrained and a nurse could run two routes.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .core import (
    CLASSIC, FLEXIBLE, Endpoint, Instance, Route, Solution, Task, Visit,
    check_mode, earliest_start_times, make_solution,
)
from .exceptions import ExtractionError, InvalidArgumentError, ModelBuildError, StructureError

BINARY = "binary"
CONTINUOUS = "continuous"
LE, EQ, GE = "<=", "=", ">="


@dataclass(frozen=True)
class Variable:
    tag: str
    kind: str
    lb: float
    ub: float


@dataclass(frozen=True)
class Constraint:
    name: str
    coeffs: tuple[tuple[int, float], ...]
    sense: str
    rhs: float


@dataclass(frozen=True)
class LinearModel:
    name: str
    variables: tuple[Variable, ...]
    objective: tuple[tuple[int, float], ...]
    constraints: tuple[Constraint, ...]
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        n = len(self.variables)
        seen = set()
        for row in self.constraints:
            if row.name in seen:
                raise ModelBuildError(f"duplicate constraint name {row.name}")
            seen.add(row.name)
            for col, _ in row.coeffs:
                if not 0 <= col < n:
                    raise ModelBuildError(f"row {row.name} references unknown column {col}")
        for var in self.variables:
            if var.kind == BINARY and (var.lb, var.ub) != (0.0, 1.0):
                raise ModelBuildError(f"binary {var.tag} must have bounds [0, 1]")

    def stats(self) -> dict:
        return {
            "rows": len(self.constraints),
            "columns": len(self.variables),
            "binaries": sum(v.kind == BINARY for v in self.variables),
            "nonzeros": sum(len(r.coeffs) for r in self.constraints),
        }

    def row_activity(self, row: Constraint, values) -> float:
        return math.fsum(c * values[j] for j, c in row.coeffs)

    def violated(self, values, tol: float = 1e-6) -> list[str]:
        """Names of rows and bounds that ``values`` (indexed by column) breaks."""
        bad = []
        for j, var in enumerate(self.variables):
            v = values[j]
            if v < var.lb - tol or v > var.ub + tol:
                bad.append(f"bound:{var.tag}")
            if var.kind == BINARY and min(abs(v), abs(v - 1)) > tol:
                bad.append(f"integrality:{var.tag}")
        for row in self.constraints:
            act = self.row_activity(row, values)
            if ((row.sense == LE and act > row.rhs + tol)
                    or (row.sense == GE and act < row.rhs - tol)
                    or (row.sense == EQ and abs(act - row.rhs) > tol)):
                bad.append(row.name)
        return bad

    def objective_value(self, values) -> float:
        return math.fsum(c * values[j] for j, c in self.objective)


class VarMap:
    """Bijection between variable tags, LP names and column indices."""

    def __init__(self, tags):
        self.tags = list(tags)
        self.index = {t: j for j, t in enumerate(self.tags)}
        self.lp_names = [lp_name(t) for t in self.tags]
        self.by_lp_name = {n: j for j, n in enumerate(self.lp_names)}
        if len(self.index) != len(self.tags) or len(self.by_lp_name) != len(self.tags):
            raise ModelBuildError("variable tags are not unique")

    def __len__(self):
        return len(self.tags)

    def __contains__(self, tag):
        return tag in self.index

    def column(self, key) -> int:
        if isinstance(key, int):
            if not 0 <= key < len(self.tags):
                raise KeyError(key)
            return key
        if key in self.index:
            return self.index[key]
        return self.by_lp_name[key]

    def dense(self, assignment: Mapping, default: float = 0.0) -> list[float]:
        values = [default] * len(self.tags)
        for key, val in assignment.items():
            try:
                values[self.column(key)] = float(val)
            except KeyError:
                raise ExtractionError(f"unknown variable {key!r}") from None
        return values


def lp_name(tag: str) -> str:
    return tag.replace("[", "_").replace("]", "").replace(",", "_")


def _task_label(task: Task) -> str:
    return f"{task.patient}.{task.service + 1}"


def model_constants(instance: Instance) -> dict:
    n, S = instance.num_patients, instance.num_services
    count_m = (n + 2) ** 2 * S
    horizon = (float(instance.window_hi.max()) + float(instance.service_duration.max())
               + float(instance.travel_time.max()) + max(0.0, -float(instance.window_lo.min())))
    return {"epsilon": 1.0 / (count_m + 1), "M_count": float(count_m), "M_time": horizon}


def build_milp(instance: Instance, mode: str = FLEXIBLE,
               strict_all_nurses: bool = False) -> tuple[LinearModel, VarMap]:
    """Build the routing model.  Rows are emitted per nurse, then per task."""
    check_mode(mode)
    uncovered = instance.uncovered_demands()
    if uncovered:
        i, s = uncovered[0]
        raise ModelBuildError(f"service {s + 1} of patient {i} has no qualified nurse")
    flex = mode == FLEXIBLE
    tasks = instance.tasks
    tt = instance.travel_time
    lab = instance.lab
    V = instance.num_nurses
    consts = model_constants(instance)
    eps, M, MT = consts["epsilon"], consts["M_count"], consts["M_time"]

    tags, variables, obj = [], [], []

    def add_var(tag, kind, lb, ub, cost=0.0):
        tags.append(tag)
        variables.append(Variable(tag, kind, float(lb), float(ub)))
        if cost:
            obj.append((len(tags) - 1, float(cost)))
        return len(tags) - 1

    labels = [_task_label(t) for t in tasks]
    origins = [("D", 0)] + ([("L", lab)] if flex else [])
    x = {}      # (u_label, v_label, k) -> column
    svar = {}   # (task index, k) -> column
    delta = {}
    for k in range(V):
        kk = k + 1
        if not strict_all_nurses:
            x["D", "D", k] = add_var(f"x[D,D,{kk}]", BINARY, 0, 1)
        for name, node in origins:
            for b, tb in enumerate(tasks):
                x[name, labels[b], k] = add_var(f"x[{name},{labels[b]},{kk}]", BINARY, 0, 1,
                                                tt[node, tb.patient])
        for a, ta in enumerate(tasks):
            for b, tb in enumerate(tasks):
                if a != b:
                    x[labels[a], labels[b], k] = add_var(
                        f"x[{labels[a]},{labels[b]},{kk}]", BINARY, 0, 1, tt[ta.patient, tb.patient])
            for name, node in origins:
                x[labels[a], name, k] = add_var(f"x[{labels[a]},{name},{kk}]", BINARY, 0, 1,
                                                tt[ta.patient, node])
        for a, ta in enumerate(tasks):
            svar[a, k] = add_var(f"S[{ta.patient},{kk},{ta.service + 1}]", CONTINUOUS,
                                 ta.window[0], ta.window[1])
        if flex:
            delta[k, 1] = add_var(f"delta[{kk},1]", BINARY, 0, 1)
            delta[k, 2] = add_var(f"delta[{kk},2]", BINARY, 0, 1)

    rows = []

    def row(name, coeffs, sense, rhs):
        merged = {}
        for j, c in coeffs:
            merged[j] = merged.get(j, 0.0) + float(c)
        rows.append(Constraint(name, tuple((j, c) for j, c in merged.items() if c != 0.0),
                               sense, float(rhs)))

    for k in range(V):
        kk = k + 1
        idle = [(x["D", "D", k], 1.0)] if not strict_all_nurses else []
        out_d = [(x["D", labels[b], k], 1.0) for b in range(len(tasks))]
        in_d = [(x[labels[a], "D", k], 1.0) for a in range(len(tasks))]
        if not flex:
            row(f"DEPOT_OUT[{kk}]", out_d + idle, EQ, 1)
            row(f"DEPOT_IN[{kk}]", in_d + idle, EQ, 1)
            continue
        out_l = [(x["L", labels[b], k], 1.0) for b in range(len(tasks))]
        in_l = [(x[labels[a], "L", k], 1.0) for a in range(len(tasks))]
        into_start = [(x[u, labels[b], k], 1.0)
                      for b, tb in enumerate(tasks) if instance.start_req[tb.service]
                      for u in ["D", "L"] + [labels[a] for a in range(len(tasks)) if a != b]]
        into_end = [(x[u, labels[b], k], 1.0)
                    for b, tb in enumerate(tasks) if instance.end_req[tb.service]
                    for u in ["D", "L"] + [labels[a] for a in range(len(tasks)) if a != b]]
        d1, d2 = delta[k, 1], delta[k, 2]
        row(f"C2_lo[{kk}]", [(j, eps * c) for j, c in into_start] + [(d1, -1.0)], LE, 0)
        row(f"C2_hi[{kk}]", [(d1, 1.0)] + [(j, -c) for j, c in into_start], LE, 0)
        row(f"C3[{kk}]", out_d + idle + [(d1, M)], GE, 1)
        row(f"C4[{kk}]", out_d + idle + [(d1, -M)], LE, 1)
        row(f"C5[{kk}]", out_l + [(d1, -M)], GE, 1 - M)
        row(f"C6[{kk}]", out_l + [(d1, M)], LE, 1 + M)
        row(f"C7_lo[{kk}]", [(j, eps * c) for j, c in into_end] + [(d2, -1.0)], LE, 0)
        row(f"C7_hi[{kk}]", [(d2, 1.0)] + [(j, -c) for j, c in into_end], LE, 0)
        row(f"C8[{kk}]", in_d + idle + [(d2, M)], GE, 1)
        row(f"C9[{kk}]", in_d + idle + [(d2, -M)], LE, 1)
        row(f"C10[{kk}]", in_l + [(d2, -M)], GE, 1 - M)
        row(f"C11[{kk}]", in_l + [(d2, M)], LE, 1 + M)
        row(f"ONE_OUT[{kk}]", out_d + out_l + idle, EQ, 1)
        row(f"ONE_IN[{kk}]", in_d + in_l + idle, EQ, 1)

    others = [name for name, _ in origins]
    for k in range(V):
        kk = k + 1
        for b, tb in enumerate(tasks):
            preds = others + [labels[a] for a in range(len(tasks)) if a != b]
            succs = [labels[a] for a in range(len(tasks)) if a != b] + others
            inflow = [(x[u, labels[b], k], 1.0) for u in preds]
            outflow = [(x[labels[b], w, k], -1.0) for w in succs]
            row(f"C12[{labels[b]},{kk}]", inflow + outflow, EQ, 0)
            if not instance.qualification[k, tb.service]:
                row(f"C16[{tb.patient},{kk},{tb.service + 1}]", inflow, LE, 0)
        for b, tb in enumerate(tasks):
            for name, node in origins:
                # leaving an origin at time 0
                row(f"C13[{name},{labels[b]},{kk}]",
                    [(x[name, labels[b], k], MT), (svar[b, k], -1.0)], LE, MT - tt[node, tb.patient])
            for a, ta in enumerate(tasks):
                if a == b:
                    continue
                lag = ta.duration + tt[ta.patient, tb.patient]
                row(f"C13[{labels[a]},{labels[b]},{kk}]",
                    [(svar[a, k], 1.0), (x[labels[a], labels[b], k], MT), (svar[b, k], -1.0)],
                    LE, MT - lag)

    for b, tb in enumerate(tasks):
        preds = others + [labels[a] for a in range(len(tasks)) if a != b]
        coeffs = [(x[u, labels[b], k], float(instance.qualification[k, tb.service]))
                  for k in range(V) for u in preds]
        row(f"C15[{tb.patient},{tb.service + 1}]", coeffs, EQ, 1)

    model = LinearModel(
        name=f"{instance.name}-{mode}",
        variables=tuple(variables),
        objective=tuple(obj),
        constraints=tuple(rows),
        params={**consts, "mode": mode, "strict_all_nurses": strict_all_nurses},
    )
    return model, VarMap(tags)


# --------------------------------------------------------------------------
# LP text format
# --------------------------------------------------------------------------

def _num(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


def _terms(coeffs, names, first_sign=True):
    parts = []
    for j, c in sorted(coeffs, key=lambda jc: names[jc[0]]):
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        text = names[j] if mag == 1 else f"{_num(mag)} {names[j]}"
        parts.append(f"{sign} {text}")
    if parts and parts[0].startswith("+ "):
        parts[0] = parts[0][2:]
    lines, cur = [], ""
    for p in parts:
        if len(cur) + len(p) + 1 > 200:
            lines.append(cur)
            cur = ""
        cur = f"{cur} {p}" if cur else p
    if cur:
        lines.append(cur)
    return lines


def dumps_lp(model: LinearModel) -> str:
    names = [lp_name(v.tag) for v in model.variables]
    for name in names:
        if len(name) > 255:
            raise ModelBuildError(f"name too long for LP format: {name[:40]}...")
    out = [f"\\ {model.name}", "Minimize"]
    obj = _terms(model.objective, names)
    if obj:
        out.append(" obj: " + obj[0])
        out.extend("   " + line for line in obj[1:])
    else:
        out.append(" obj:")
    out.append("Subject To")
    for r in sorted(model.constraints, key=lambda r: lp_name(r.name)):
        body = _terms(r.coeffs, names) or ["0 " + names[0]] if model.variables else ["0"]
        out.append(f" {lp_name(r.name)}: " + body[0])
        out.extend("   " + line for line in body[1:])
        out[-1] += f" {r.sense} {_num(r.rhs)}"
    out.append("Bounds")
    order = sorted(range(len(names)), key=lambda j: names[j])
    for j in order:
        var = model.variables[j]
        if var.kind == BINARY:
            continue
        lb = "-inf" if var.lb == -math.inf else _num(var.lb)
        ub = "+inf" if var.ub == math.inf else _num(var.ub)
        out.append(f" {lb} <= {names[j]} <= {ub}")
    binaries = [names[j] for j in order if model.variables[j].kind == BINARY]
    if binaries:
        out.append("Binaries")
        out.extend(" " + name for name in binaries)
    out.append("End")
    return "\n".join(out) + "\n"


def export_lp(model: LinearModel, path) -> None:
    Path(path).write_text(dumps_lp(model), encoding="ascii")


# --------------------------------------------------------------------------
# Assignments <-> solutions
# --------------------------------------------------------------------------

_X_TAG = re.compile(r"^x\[([^,\]]+),([^,\]]+),(\d+)\]$")
_S_TAG = re.compile(r"^S\[(\d+),(\d+),(\d+)\]$")


def _node_task(instance, label):
    if label in ("D", "L"):
        return None
    p, s = label.split(".")
    return instance.tasks[instance.task_ids[int(p), int(s) - 1]]


def extract_solution(instance: Instance, varmap: VarMap, assignment: Mapping,
                     mode: str = FLEXIBLE, tol: float = 1e-6) -> Solution:
    """Rebuild routes by following each nurse's active arcs from its origin.

    Start times come from the ``S`` values, nudged up to the earliest
    feasible time when solver tolerances leave them marginally early.
    """
    check_mode(mode)
    values = varmap.dense(assignment)
    arcs = {k: {} for k in range(instance.num_nurses)}
    for j, tag in enumerate(varmap.tags):
        m = _X_TAG.match(tag)
        if m is None:
            if tag.startswith("delta[") and min(abs(values[j]), abs(values[j] - 1)) > tol:
                raise ExtractionError(f"binary {tag} has fractional value {values[j]}")
            continue
        v = values[j]
        if min(abs(v), abs(v - 1)) > tol:
            raise ExtractionError(f"binary {tag} has fractional value {v}")
        if v > 0.5:
            u, w, kk = m.group(1), m.group(2), int(m.group(3)) - 1
            if not 0 <= kk < instance.num_nurses:
                raise ExtractionError(f"arc {tag} names an unknown nurse")
            arcs[kk].setdefault(u, []).append(w)

    routes = []
    for k in range(instance.num_nurses):
        out = arcs[k]
        listing = sorted(f"x[{u},{w},{k + 1}]" for u, ws in out.items() for w in ws)
        if not out or out == {"D": ["D"]}:
            routes.append(Route(k, Endpoint.DEPOT, Endpoint.DEPOT, ()))
            continue
        if "D" in out and "D" in out["D"]:
            raise StructureError(f"nurse {k + 1} is idle and working at once", listing)
        for u, ws in out.items():
            if len(ws) > 1:
                raise StructureError(f"nurse {k + 1} leaves {u} more than once", listing)
        starts = [u for u in ("D", "L") if u in out]
        if len(starts) != 1:
            raise StructureError(f"nurse {k + 1} needs exactly one origin, found {len(starts)}", listing)
        here, used, seq = starts[0], 0, []
        while True:
            nxt = out.get(here, [None])[0] if here not in ("D", "L") or not seq else None
            if not seq:
                nxt = out[here][0]
            if nxt is None:
                raise StructureError(f"nurse {k + 1} stops at {here} without returning", listing)
            used += 1
            if nxt in ("D", "L"):
                end = nxt
                break
            task = _node_task(instance, nxt)
            if task in seq:
                raise StructureError(f"nurse {k + 1} revisits {nxt}", listing)
            seq.append(task)
            here = nxt
        total = sum(len(ws) for ws in out.values())
        if used != total:
            raise StructureError(f"nurse {k + 1} has arcs off its route (subtour)", listing)
        start = Endpoint.DEPOT if starts[0] == "D" else Endpoint.LAB
        end = Endpoint.DEPOT if end == "D" else Endpoint.LAB
        times = _start_times(instance, varmap, values, k, start, seq, tol)
        routes.append(Route(k, start, end, tuple(Visit(t, s) for t, s in zip(seq, times))))
    return make_solution(instance, routes)


def _start_times(instance, varmap, values, k, start, seq, tol):
    tt = instance.travel_time
    out = []
    here, ready = instance.node(start), 0.0
    for task in seq:
        tag = f"S[{task.patient},{k + 1},{task.service + 1}]"
        earliest = ready + tt[here, task.patient]
        lo, hi = task.window
        value = values[varmap.column(tag)] if tag in varmap else earliest
        value = max(value, earliest, lo)
        if value > hi and value - hi <= tol:
            value = hi
        out.append(float(value))
        here, ready = task.patient, value + task.duration
    return out


def assignment_from_solution(instance: Instance, varmap: VarMap, solution: Solution,
                             mode: str = FLEXIBLE) -> dict[str, float]:
    """Certificate: the variable values that encode ``solution``.

    Start times of services a nurse does not perform are parked at the
    window opening.
    """
    values = {tag: 0.0 for tag in varmap.tags}
    for tag in varmap.tags:
        m = _S_TAG.match(tag)
        if m:
            p = int(m.group(1))
            values[tag] = float(instance.window_lo[p - 1])
    for route in solution.routes:
        kk = route.nurse + 1
        if not route.visits:
            if f"x[D,D,{kk}]" in varmap:
                values[f"x[D,D,{kk}]"] = 1.0
            continue
        labels = ([route.start.short]
                  + [_task_label(v.task) for v in route.visits] + [route.end.short])
        for u, w in zip(labels, labels[1:]):
            tag = f"x[{u},{w},{kk}]"
            if tag not in varmap:
                raise InvalidArgumentError(f"solution uses arc {tag} absent from the model")
            values[tag] = 1.0
        for v in route.visits:
            values[f"S[{v.task.patient},{kk},{v.task.service + 1}]"] = float(v.start_time)
        if mode == FLEXIBLE:
            values[f"delta[{kk},1]"] = float(route.start is Endpoint.LAB)
            values[f"delta[{kk},2]"] = float(route.end is Endpoint.LAB)
    return values


# --------------------------------------------------------------------------
# External solver bridge
# --------------------------------------------------------------------------

def read_solution_file(path) -> dict[str, float]:
    """Parse ``<variable-name> <value>`` lines; blank and ``#`` lines are skipped."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ExtractionError(f"{path}:{lineno}: expected '<name> <value>'")
        try:
            out[parts[0]] = float(parts[1])
        except ValueError:
            raise ExtractionError(f"{path}:{lineno}: bad value {parts[1]!r}") from None
    return out


def write_solution_file(assignment: Mapping[str, float], path) -> None:
    lines = [f"{lp_name(k) if '[' in k else k} {float(v)!r}" for k, v in assignment.items()]
    Path(path).write_text("\n".join(lines) + "\n")


def external_solver_available() -> bool:
    try:
        import highspy  # noqa: F401
    except ImportError:
        return False
    return True


def solve_lp_file(path, time_limit: float = 300.0) -> tuple[str, float | None, dict[str, float]]:
    """Solve an LP file with HiGHS; returns (status, objective, values by LP name)."""
    import highspy

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("time_limit", float(time_limit))
    h.setOptionValue("mip_rel_gap", 0.0)
    h.setOptionValue("threads", 1)
    h.readModel(str(path))
    h.run()
    status = h.modelStatusToString(h.getModelStatus())
    if h.getInfo().primal_solution_status != 2:
        return status, None, {}
    sol = h.getSolution()
    lp = h.getLp()
    names = list(lp.col_names_)
    values = dict(zip(names, sol.col_value))
    return status, h.getInfo().objective_function_value, values
