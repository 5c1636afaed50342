"""Greedy insertion and best-improvement local search.

Routes are handled as lists of task ids.  Every route evaluation derives
the endpoints from the services on the route and re-propagates start
times, so a move that carries a flagged service from one nurse to another
re-prices both routes' endpoint legs.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .core import FLEXIBLE, Instance, Solution, check_mode, make_route, make_solution
from .exceptions import InvalidArgumentError
from .validate import validate

NEIGHBORHOODS = ("relocate", "swap", "two_opt_within_route")


@dataclass(frozen=True)
class HeuristicConfig:
    seed: int = 0
    iteration_budget: int = 10_000
    neighborhoods: tuple[str, ...] = NEIGHBORHOODS
    restarts: int = 64
    debug: bool = False
    max_segment: int = 3

    def __post_init__(self):
        if self.iteration_budget <= 0:
            raise InvalidArgumentError("iteration_budget must be positive")
        if self.restarts < 1:
            raise InvalidArgumentError("restarts must be at least 1")
        if self.max_segment < 1:
            raise InvalidArgumentError("max_segment must be at least 1")
        hoods = tuple(self.neighborhoods)
        if not hoods:
            raise InvalidArgumentError("enable at least one neighborhood")
        unknown = set(hoods) - set(NEIGHBORHOODS)
        if unknown:
            raise InvalidArgumentError(f"unknown neighborhoods {sorted(unknown)}")
        object.__setattr__(self, "neighborhoods", hoods)


class RouteEvaluator:
    """Memoised cost of a (nurse, task sequence) pair; ``None`` if infeasible."""

    def __init__(self, instance: Instance, mode: str = FLEXIBLE):
        self.instance = instance
        self.mode = check_mode(mode)
        tasks = instance.tasks
        self.tasks = tasks
        self.patient = [t.patient for t in tasks]
        self.service = [t.service for t in tasks]
        self.duration = [t.duration for t in tasks]
        self.lo = [t.window[0] for t in tasks]
        self.hi = [t.window[1] for t in tasks]
        self.tt = instance.travel_time.tolist()
        self.start_flag = [bool(instance.start_req[s]) and mode == FLEXIBLE for s in self.service]
        self.end_flag = [bool(instance.end_req[s]) and mode == FLEXIBLE for s in self.service]
        self.qualified = [[bool(instance.qualification[k, s]) for s in self.service]
                          for k in range(instance.num_nurses)]
        self._cache: dict[tuple[int, ...], float | None] = {}

    def cost(self, seq) -> float | None:
        key = tuple(seq)
        try:
            return self._cache[key]
        except KeyError:
            pass
        value = self._evaluate(key)
        self._cache[key] = value
        return value

    def _evaluate(self, seq):
        if not seq:
            return 0.0
        tt = self.tt
        lab = self.instance.lab
        origin = lab if any(self.start_flag[t] for t in seq) else 0
        terminal = lab if any(self.end_flag[t] for t in seq) else 0
        now = 0.0
        here = origin
        travel = 0.0
        for t in seq:
            p = self.patient[t]
            leg = tt[here][p]
            travel += leg
            begin = now + leg
            if begin < self.lo[t]:
                begin = self.lo[t]
            if begin > self.hi[t]:
                return None
            now = begin + self.duration[t]
            here = p
        return travel + tt[here][terminal]

    def solution(self, routes) -> Solution:
        inst = self.instance
        built = [make_route(inst, k, [self.tasks[t] for t in seq], self.mode)
                 for k, seq in enumerate(routes)]
        return make_solution(inst, built)


def _ids_from_solution(instance: Instance, solution: Solution) -> list[list[int]]:
    ids = instance.task_ids
    routes = [[] for _ in range(instance.num_nurses)]
    for r in solution.routes:
        routes[r.nurse] = [ids[v.task.key] for v in r.visits]
    return routes


def construct_greedy(instance: Instance, mode: str = FLEXIBLE, seed: int = 0,
                     strict_all_nurses: bool = False,
                     evaluator: RouteEvaluator | None = None) -> Solution | None:
    """Cheapest-insertion construction, most constrained task first.

    A non-zero ``seed`` perturbs the window-close keys of the order and
    adds noise to insertion costs, giving restarts different starting
    points.  Returns ``None`` when some task has no feasible insertion.
    """
    ev = evaluator or RouteEvaluator(instance, mode)
    V = instance.num_nurses
    n_qual = [sum(ev.qualified[k][t] for k in range(V)) for t in range(len(ev.tasks))]
    rng = np.random.default_rng(seed) if seed else None
    if rng is not None:
        jitter = rng.normal(0.0, 60.0, size=len(ev.tasks))
        noise_scale = float(rng.uniform(0.0, 20.0))
    else:
        jitter = np.zeros(len(ev.tasks))
        noise_scale = 0.0
    order = sorted(range(len(ev.tasks)), key=lambda t: (n_qual[t], ev.hi[t] + jitter[t], t))

    routes = [[] for _ in range(V)]
    costs = [0.0] * V
    pending = list(reversed(order))
    ejections = 0
    while pending:
        t = pending.pop()
        best = None
        for k in range(V):
            if not ev.qualified[k][t]:
                continue
            seq = routes[k]
            for pos in range(len(seq) + 1):
                cand = seq[:pos] + [t] + seq[pos:]
                c = ev.cost(cand)
                if c is None:
                    continue
                delta = c - costs[k]
                if noise_scale:
                    delta += noise_scale * float(rng.standard_normal())
                if best is None or delta < best[0] - 1e-12:
                    best = (delta, k, cand, c)
        if best is None:
            # a pending lab-flagged task may move the route's endpoint
            # closer and make room; insert both together
            pair = _insert_with_enabler(ev, routes, costs, t, pending)
            if pair is not None:
                k, cand, c, u = pair
                routes[k], costs[k] = cand, c
                pending.remove(u)
                continue
            # make room by ejecting one task; it goes back on the queue
            if ejections >= 4 * len(ev.tasks):
                return None
            kick = _eject_for(ev, routes, costs, t)
            if kick is None:
                return None
            k, cand, c, out = kick
            ejections += 1
            routes[k], costs[k] = cand, c
            pending.append(out)
            continue
        _, k, cand, c = best
        routes[k] = cand
        costs[k] = c

    if strict_all_nurses and not _fill_idle(ev, routes, costs):
        return None
    return ev.solution(routes)


def _insert_with_enabler(ev, routes, costs, t, pending):
    best = None
    flagged = [u for u in pending if ev.start_flag[u] or ev.end_flag[u]]
    for k in range(len(routes)):
        if not ev.qualified[k][t]:
            continue
        for u in flagged:
            if not ev.qualified[k][u]:
                continue
            for i in range(len(routes[k]) + 1):
                base = routes[k][:i] + [t] + routes[k][i:]
                for j in range(len(base) + 1):
                    cand = base[:j] + [u] + base[j:]
                    c = ev.cost(cand)
                    if c is not None and (best is None or c - costs[k] < best[0] - 1e-12):
                        best = (c - costs[k], k, cand, c, u)
    return None if best is None else best[1:]


def _eject_for(ev, routes, costs, t):
    """Cheapest (nurse, new route, cost, ejected task) that fits ``t`` in place of another task."""
    best = None
    for k in range(len(routes)):
        if not ev.qualified[k][t]:
            continue
        seq = routes[k]
        for i, u in enumerate(seq):
            rest = seq[:i] + seq[i + 1:]
            for pos in range(len(rest) + 1):
                cand = rest[:pos] + [t] + rest[pos:]
                c = ev.cost(cand)
                if c is None:
                    continue
                delta = c - costs[k]
                if best is None or delta < best[0] - 1e-12:
                    best = (delta, k, cand, c, u)
    return None if best is None else best[1:]


def _fill_idle(ev, routes, costs):
    """Give every idle nurse one task taken from another route, cheapest first."""
    for k in range(len(routes)):
        if routes[k]:
            continue
        best = None
        for j, seq in enumerate(routes):
            if len(seq) < 2:
                continue
            for pos, t in enumerate(seq):
                if not ev.qualified[k][t]:
                    continue
                rest = seq[:pos] + seq[pos + 1:]
                c_rest, c_new = ev.cost(rest), ev.cost([t])
                if c_rest is None or c_new is None:
                    continue
                delta = c_rest + c_new - costs[j]
                if best is None or delta < best[0]:
                    best = (delta, j, rest, t, c_rest, c_new)
        if best is None:
            return False
        _, j, rest, t, c_rest, c_new = best
        routes[j], costs[j] = rest, c_rest
        routes[k], costs[k] = [t], c_new
    return True


def _moves(ev, routes, hoods, strict, max_segment=1):
    """Yield candidate moves as {nurse: new sequence} in a fixed scan order.

    Relocate moves a run of up to ``max_segment`` consecutive tasks, so
    services of one patient visited back to back can travel together.
    """
    V = len(routes)
    if "relocate" in hoods:
        for a in range(V):
            src = routes[a]
            for size in range(1, max_segment + 1):
                if strict and len(src) == size:
                    continue
                for i in range(len(src) - size + 1):
                    seg = src[i:i + size]
                    rest = src[:i] + src[i + size:]
                    for b in range(V):
                        if not all(ev.qualified[b][t] for t in seg):
                            continue
                        dst = rest if b == a else routes[b]
                        for j in range(len(dst) + 1):
                            if b == a and j == i:
                                continue
                            new = dst[:j] + seg + dst[j:]
                            yield ({a: new} if b == a else {a: rest, b: new})
    if "swap" in hoods:
        flat = [(k, i) for k in range(V) for i in range(len(routes[k]))]
        for x in range(len(flat)):
            a, i = flat[x]
            for y in range(x + 1, len(flat)):
                b, j = flat[y]
                ta, tb = routes[a][i], routes[b][j]
                if a == b:
                    new = list(routes[a])
                    new[i], new[j] = tb, ta
                    yield {a: new}
                elif ev.qualified[b][ta] and ev.qualified[a][tb]:
                    na, nb = list(routes[a]), list(routes[b])
                    na[i], nb[j] = tb, ta
                    yield {a: na, b: nb}
    if "two_opt_within_route" in hoods:
        for a in range(V):
            seq = routes[a]
            for i in range(len(seq) - 1):
                for j in range(i + 2, len(seq) + 1):
                    yield {a: seq[:i] + seq[i:j][::-1] + seq[j:]}


def improve_local_search(instance: Instance, mode: str, start: Solution,
                         config: HeuristicConfig = HeuristicConfig(),
                         strict_all_nurses: bool = False,
                         evaluator: RouteEvaluator | None = None) -> Solution:
    """Best-improvement descent; never returns a worse solution than ``start``."""
    ev = evaluator or RouteEvaluator(instance, mode)
    routes = _ids_from_solution(instance, start)
    costs = [ev.cost(seq) for seq in routes]
    if any(c is None for c in costs):
        raise InvalidArgumentError("start solution is not feasible")

    for _ in range(config.iteration_budget):
        best_delta, best_move = -1e-9, None
        for move in _moves(ev, routes, config.neighborhoods, strict_all_nurses, config.max_segment):
            delta = 0.0
            for k, seq in move.items():
                c = ev.cost(seq)
                if c is None:
                    break
                delta += c - costs[k]
            else:
                if delta < best_delta:
                    best_delta, best_move = delta, move
        if best_move is None:
            break
        for k, seq in best_move.items():
            routes[k] = seq
            costs[k] = ev.cost(seq)
        if config.debug:
            report = validate(instance, ev.solution(routes), mode, strict_all_nurses)
            assert report.ok, str(report)

    result = ev.solution(routes)
    if result.objective > start.objective:
        return start
    return result


def solve_heuristic(instance: Instance, mode: str = FLEXIBLE,
                    config: HeuristicConfig = HeuristicConfig(),
                    strict_all_nurses: bool = False):
    """Greedy + local search with restarts; best by (objective, tie-break key)."""
    from .exact import FEASIBLE, UNKNOWN, SolveOutcome, check_solvable

    check_solvable(instance)
    t0 = time.perf_counter()
    ev = RouteEvaluator(instance, mode)
    best = None
    for r in range(config.restarts):
        seed = config.seed * 1_000_003 + r if r else config.seed
        sol = construct_greedy(instance, mode, seed, strict_all_nurses, ev)
        if sol is None:
            continue
        sol = improve_local_search(instance, mode, sol, config, strict_all_nurses, ev)
        key = (sol.objective, sol.sort_key(instance))
        if best is None or _better(key, best[0]):
            best = (key, sol)
    wall = time.perf_counter() - t0
    if best is None:
        return SolveOutcome(UNKNOWN, None, 0.0, 0, wall)
    return SolveOutcome(FEASIBLE, best[1], 0.0, 0, wall)


def _better(a, b, tol=1e-9):
    if a[0] < b[0] - tol:
        return True
    if a[0] > b[0] + tol:
        return False
    return a[1] < b[1]
