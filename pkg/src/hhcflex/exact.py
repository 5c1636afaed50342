"""Exact solvers: exhaustive enumeration and depth-first branch-and-bound.

Both return the lexicographically smallest optimum, comparing solutions by
the per-nurse sequences of task ids (nurse 0 first).

The branch-and-bound grows all routes at once.  At every node the nurse
whose partial route finishes earliest is extended (by one more task) or
closed, so each complete solution is reached along exactly one path.
Children are tried most-constrained task first: fewest qualified nurses,
then earliest window close.  A route's origin stays open until a
start-at-lab service joins it; both the depot-start and the lab-start
schedules are propagated until then.  Nodes are pruned when

* an unassigned task can no longer be reached by any qualified nurse in
  time (shortest-path travel, so the test holds without the triangle
  inequality);
* committed travel plus, for every unassigned task, its cheapest feasible
  incoming leg, plus each open route's cheapest admissible first and
  return legs, cannot beat the incumbent.

Once the optimal value is known a second, lexicographic pass builds routes
nurse by nurse in task-id order and stops at the first solution that
attains it, which realises the tie-break.
"""
from __future__ import annotations

import multiprocessing as mp
import os
import time
from dataclasses import dataclass, field
from itertools import product
from typing import Optional

import numpy as np

from .core import (
    CLASSIC, FLEXIBLE, Endpoint, Instance, Route, Solution, Visit,
    check_mode, earliest_start_times, endpoint_requirements, make_solution,
)
from .exceptions import InstanceError, InvalidArgumentError, RefusedInputError
from .routes import EnumerationAborted, solve_by_enumeration

OPTIMAL = "optimal"
FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
UNKNOWN = "unknown"

BRUTEFORCE_MAX_TASKS = 8
BRUTEFORCE_MAX_NURSES = 3
INF = float("inf")
TOL = 1e-9


@dataclass(frozen=True)
class SearchLimits:
    time_limit: float = 300.0
    node_limit: int = 50_000_000
    incumbent: Optional[Solution] = None

    def __post_init__(self):
        if not self.time_limit > 0 or not self.node_limit > 0:
            raise InvalidArgumentError("search limits must be positive")


@dataclass
class SolveOutcome:
    status: str
    solution: Optional[Solution]
    bound: float
    nodes_explored: int = 0
    wall_time: float = 0.0
    stats: dict = field(default_factory=dict)

    @property
    def objective(self) -> float:
        return self.solution.objective if self.solution is not None else INF


def check_solvable(instance: Instance) -> None:
    uncovered = instance.uncovered_demands()
    if uncovered:
        i, s = uncovered[0]
        raise InstanceError(f"service {s + 1} demanded by patient {i} has no qualified nurse")


def _better(cost, key, best_cost, best_key):
    if best_key is None or cost < best_cost - TOL:
        return True
    return cost <= best_cost + TOL and key < best_key


# --------------------------------------------------------------------------
# Exhaustive enumeration
# --------------------------------------------------------------------------

def solve_bruteforce(instance: Instance, mode: str = FLEXIBLE,
                     strict_all_nurses: bool = False) -> SolveOutcome:
    """Enumerate every assignment, visit order and endpoint pair.

    Intended as an oracle for tiny instances (at most 8 tasks, 3 nurses).
    """
    check_mode(mode)
    check_solvable(instance)
    tasks = instance.tasks
    m, V = len(tasks), instance.num_nurses
    if m > BRUTEFORCE_MAX_TASKS or V > BRUTEFORCE_MAX_NURSES:
        raise RefusedInputError(
            f"brute force is limited to {BRUTEFORCE_MAX_TASKS} tasks and "
            f"{BRUTEFORCE_MAX_NURSES} nurses (got {m} tasks, {V} nurses)")
    t0 = time.perf_counter()
    tt = instance.travel_time
    ends = [Endpoint.DEPOT] if mode == CLASSIC else [Endpoint.DEPOT, Endpoint.LAB]

    # best[k][mask] = (cost, sequence, start, end) over all orders/endpoints
    evaluated = 0
    best = []
    for k in range(V):
        table = {}
        if not strict_all_nurses:
            table[0] = (0.0, (), Endpoint.DEPOT, Endpoint.DEPOT)
        allowed = [t for t in range(m) if instance.qualification[k, tasks[t].service]]

        def extend(seq, mask, start, times_ok_from):
            nonlocal evaluated
            for t in allowed:
                if mask >> t & 1:
                    continue
                new = seq + (t,)
                evaluated += 1
                times = earliest_start_times(instance, instance.node(start), [tasks[i] for i in new])
                if times is None:
                    continue
                services = {tasks[i].service for i in new}
                need = (Endpoint.DEPOT, Endpoint.DEPOT) if mode == CLASSIC else \
                    endpoint_requirements(services, instance)
                for end in ends:
                    if (start, end) != need:
                        continue
                    patients = [tasks[i].patient for i in new]
                    cost = float(tt[instance.node(start), patients[0]]
                                 + sum(tt[a, b] for a, b in zip(patients, patients[1:]))
                                 + tt[patients[-1], instance.node(end)])
                    cur = table.get(mask | 1 << t)
                    if cur is None or _better(cost, new, cur[0], cur[1]):
                        table[mask | 1 << t] = (cost, new, start, end)
                extend(new, mask | 1 << t, start, None)

        for start in ends:
            extend((), 0, start, None)
        best.append(table)

    top = None
    for assign in product(range(V), repeat=m):
        masks = [0] * V
        for t, k in enumerate(assign):
            masks[k] |= 1 << t
        parts = []
        for k in range(V):
            entry = best[k].get(masks[k])
            if entry is None:
                break
            parts.append(entry)
        else:
            cost = sum(p[0] for p in parts)
            key = tuple(p[1] for p in parts)
            if top is None or _better(cost, key, top[0], top[1]):
                top = (cost, key, parts)

    wall = time.perf_counter() - t0
    if top is None:
        return SolveOutcome(INFEASIBLE, None, INF, evaluated, wall)
    routes = []
    for k, (_, seq, start, end) in enumerate(top[2]):
        chosen = [tasks[i] for i in seq]
        times = earliest_start_times(instance, instance.node(start), chosen) or []
        routes.append(Route(k, start, end, tuple(Visit(t, s) for t, s in zip(chosen, times))))
    sol = make_solution(instance, routes)
    return SolveOutcome(OPTIMAL, sol, sol.objective, evaluated, wall)


# --------------------------------------------------------------------------
# Branch-and-bound
# --------------------------------------------------------------------------

class _LimitReached(Exception):
    pass


class _Found(Exception):
    pass


UNSTARTED, OPEN, CLOSED = 0, 1, 2


class _Search:
    def __init__(self, instance, mode, strict, lazy_endpoints, limits, shared_best=None,
                 symmetry=True):
        self.inst = instance
        self.flex = mode == FLEXIBLE
        self.mode = mode
        self.strict = strict
        self.lazy = lazy_endpoints
        self.limits = limits
        self.shared = shared_best
        tasks = instance.tasks
        self.m = m = len(tasks)
        self.V = V = instance.num_nurses
        tt = instance.travel_time
        lab = instance.lab
        P = [t.patient for t in tasks]
        self.P = P
        self.dur = [t.duration for t in tasks]
        self.lo = [t.window[0] for t in tasks]
        self.hi = [t.window[1] for t in tasks]
        self.sflag = [self.flex and bool(instance.start_req[t.service]) for t in tasks]
        self.eflag = [self.flex and bool(instance.end_req[t.service]) for t in tasks]
        self.smask = sum(1 << t for t in range(m) if self.sflag[t])
        self.emask = sum(1 << t for t in range(m) if self.eflag[t])
        self.qual = [[bool(instance.qualification[k, t.service]) for t in tasks] for k in range(V)]
        self.qmask = [sum(1 << t for t in range(m) if self.qual[k][t]) for k in range(V)]
        self.nurses_of = [[k for k in range(V) if self.qual[k][t]] for t in range(m)]
        self.n_qual = [len(ks) for ks in self.nurses_of]
        # nurses with identical skills are interchangeable: their non-empty
        # routes are kept in increasing order of first task, idle ones last
        self.twin = [-1] * V
        if symmetry:
            for k in range(V):
                for j in range(k - 1, -1, -1):
                    if self.qmask[j] == self.qmask[k]:
                        self.twin[k] = j
                        break

        self.TT = [[float(tt[P[a], P[b]]) for b in range(m)] for a in range(m)]
        self.oD = [float(tt[0, P[t]]) for t in range(m)]
        self.oL = [float(tt[lab, P[t]]) for t in range(m)]
        self.rD = [float(tt[P[t], 0]) for t in range(m)]
        self.rL = [float(tt[P[t], lab]) for t in range(m)]

        # shortest travel times between nodes, for reachability tests only
        sp = np.array(tt, dtype=float)
        for via in range(sp.shape[0]):
            sp = np.minimum(sp, sp[:, via:via + 1] + sp[via:via + 1, :])
        self.SPT = [[float(sp[P[a], P[b]]) for b in range(m)] for a in range(m)]
        reach_d = [float(sp[0, P[t]]) <= self.hi[t] for t in range(m)]
        reach_l = [self.flex and float(sp[lab, P[t]]) <= self.hi[t] for t in range(m)]
        self.reach_origin = [reach_d[t] or reach_l[t] for t in range(m)]
        self.min_origin = [min(self.oD[t], self.oL[t]) if self.flex else self.oD[t] for t in range(m)]

        # candidate predecessors of each task sorted by leg length; a pair is
        # kept only if some nurse holds both services and the windows allow it
        self.preds = []
        for t in range(m):
            cand = []
            for u in range(m):
                if u == t:
                    continue
                if not any(self.qual[k][u] and self.qual[k][t] for k in range(V)):
                    continue
                if self.lo[u] + self.dur[u] + self.SPT[u][t] > self.hi[t]:
                    continue
                cand.append((self.TT[u][t], u))
            cand.sort()
            self.preds.append(cand)
        self.ret_order_D = sorted(range(m), key=lambda t: (self.rD[t], t))
        self.ret_order_L = sorted(range(m), key=lambda t: (self.rL[t], t))

        self.state = [UNSTARTED] * V
        self.first = [-1] * V
        self.last = [-1] * V
        self.readyD = [None] * V
        self.readyL = [None] * V
        self.hs = [False] * V
        self.he = [False] * V
        self.origin = [None] * V   # fixed origin when endpoints are not lazy
        self.seq = [[] for _ in range(V)]
        self.unassigned = (1 << m) - 1
        self.committed = 0.0

        self.nodes = 0
        self.best_cost = INF
        self.best_key = None
        self.best_routes = None
        self.t0 = time.perf_counter()
        self.deadline = self.t0 + limits.time_limit
        self.history = []

    # ---- bookkeeping -------------------------------------------------

    def cutoff(self):
        if self.shared is not None:
            return min(self.best_cost, self.shared.value)
        return self.best_cost

    def _tick(self):
        self.nodes += 1
        if self.nodes >= self.limits.node_limit:
            raise _LimitReached
        if self.nodes & 1023 == 0 and time.perf_counter() > self.deadline:
            raise _LimitReached

    def _ready_options(self, k):
        """Feasible (origin, ready-time) pairs of an open route."""
        opts = []
        if not self.lazy:
            r = self.readyD[k] if self.origin[k] == 0 else self.readyL[k]
            if r is not None:
                opts.append((self.origin[k], r))
            return opts
        if not self.hs[k] and self.readyD[k] is not None:
            opts.append((0, self.readyD[k]))
        if self.flex and self.readyL[k] is not None:
            if self.hs[k] or self.unassigned & self.smask & self.qmask[k]:
                opts.append((1, self.readyL[k]))
        return opts

    def _route_time(self, k):
        if self.state[k] == UNSTARTED:
            return 0.0
        opts = self._ready_options(k)
        return min(r for _, r in opts) if opts else INF

    # ---- bound -------------------------------------------------------

    def lower_bound(self):
        """Admissible bound on the final objective, or INF if the node is dead."""
        lb = self.committed
        un = self.unassigned
        state, last = self.state, self.last
        lasts = {}
        for k in range(self.V):
            if state[k] == OPEN:
                opts = self._ready_options(k)
                if not opts:
                    return INF
                lasts[k] = min(r for _, r in opts)
                f = self.first[k]
                lb += min(self.oD[f] if o == 0 else self.oL[f] for o, _ in opts)
                lb += self._return_bound(k)

        # an unstarted nurse that alone can still serve some task must work,
        # and will pay a return leg that no incoming-leg term covers
        forced = 0
        bits = un
        while bits:
            low = bits & -bits
            t = low.bit_length() - 1
            bits ^= low
            alive = [k for k in self.nurses_of[t] if state[k] != CLOSED]
            if len(alive) == 1 and state[alive[0]] == UNSTARTED:
                forced |= 1 << alive[0]
        for k in range(self.V):
            if forced >> k & 1:
                lb += self._cheapest_return(un & self.qmask[k])

        bits = un
        while bits:
            low = bits & -bits
            t = low.bit_length() - 1
            bits ^= low
            hi_t = self.hi[t]
            reachable = False
            best_in = INF
            for k in self.nurses_of[t]:
                st = state[k]
                if st == UNSTARTED:
                    if self.reach_origin[t]:
                        reachable = True
                        if self.min_origin[t] < best_in:
                            best_in = self.min_origin[t]
                elif st == OPEN:
                    u = last[k]
                    r = lasts[k]
                    if r + self.SPT[u][t] <= hi_t:
                        reachable = True
                        if r + self.TT[u][t] <= hi_t and self.TT[u][t] < best_in:
                            best_in = self.TT[u][t]
            if not reachable:
                return INF
            for cost, u in self.preds[t]:
                if cost >= best_in:
                    break
                if un >> u & 1:
                    best_in = cost
                    break
            lb += best_in
        return lb

    def _cheapest_return(self, mask):
        best = INF
        for u in self.ret_order_D:
            if mask >> u & 1:
                best = self.rD[u]
                break
        if self.flex:
            for u in self.ret_order_L:
                if mask >> u & 1:
                    best = min(best, self.rL[u])
                    break
        return best

    def _return_bound(self, k):
        un_q = self.unassigned & self.qmask[k]
        if not self.flex:
            terms = (0,)
        elif self.he[k]:
            terms = (1,)
        elif un_q & self.emask:
            terms = (0, 1)
        else:
            terms = (0,)
        best = INF
        u0 = self.last[k]
        for term in terms:
            ret = self.rD if term == 0 else self.rL
            order = self.ret_order_D if term == 0 else self.ret_order_L
            b = ret[u0]
            for u in order:
                if ret[u] >= b:
                    break
                if un_q >> u & 1:
                    b = ret[u]
                    break
            best = min(best, b)
        return best

    # ---- moves -------------------------------------------------------

    def _append(self, k, t, origin=None):
        """Try to append task t to nurse k; return an undo record or None."""
        lo, hi, d = self.lo[t], self.hi[t], self.dur[t]
        st = self.state[k]
        if st == UNSTARTED:
            if self.lazy:
                want_d = not self.sflag[t]
                want_l = self.flex
            else:
                want_d, want_l = origin == 0, origin == 1
            nD = nL = None
            j = self.twin[k]
            if j >= 0 and (not self.seq[j] or t < self.first[j]):
                return None
            if want_d:
                b = max(self.oD[t], lo)
                if b <= hi:
                    nD = b + d
            if want_l:
                b = max(self.oL[t], lo)
                if b <= hi:
                    nL = b + d
            if nD is None and nL is None:
                return None
            rec = (k, st, self.first[k], self.last[k], self.readyD[k], self.readyL[k],
                   self.hs[k], self.he[k], self.origin[k], 0.0)
            self.state[k] = OPEN
            self.first[k] = t
            self.origin[k] = origin
        else:
            u = self.last[k]
            leg = self.TT[u][t]
            nD = nL = None
            if self.readyD[k] is not None and not (self.lazy and self.sflag[t]):
                b = max(self.readyD[k] + leg, lo)
                if b <= hi:
                    nD = b + d
            if self.readyL[k] is not None:
                b = max(self.readyL[k] + leg, lo)
                if b <= hi:
                    nL = b + d
            if nD is None and nL is None:
                return None
            rec = (k, st, self.first[k], self.last[k], self.readyD[k], self.readyL[k],
                   self.hs[k], self.he[k], self.origin[k], leg)
            self.committed += leg
        self.last[k] = t
        self.readyD[k] = nD
        self.readyL[k] = nL
        self.hs[k] = self.hs[k] or self.sflag[t]
        self.he[k] = self.he[k] or self.eflag[t]
        self.seq[k].append(t)
        self.unassigned &= ~(1 << t)
        return rec

    def _undo_append(self, rec, t):
        k, st, first, last, rD, rL, hs, he, origin, leg = rec
        self.state[k] = st
        self.first[k] = first
        self.last[k] = last
        self.readyD[k] = rD
        self.readyL[k] = rL
        self.hs[k] = hs
        self.he[k] = he
        self.origin[k] = origin
        self.committed -= leg
        self.seq[k].pop()
        self.unassigned |= 1 << t

    def _close_cost(self, k):
        """Endpoint legs paid when nurse k stops, or None if it may not stop."""
        st = self.state[k]
        if st == UNSTARTED:
            return None if self.strict else 0.0
        f, u = self.first[k], self.last[k]
        if self.lazy:
            origin = 1 if self.hs[k] else 0
        else:
            origin = self.origin[k]
            if origin != (1 if self.hs[k] else 0):
                return None
        ready = self.readyL[k] if origin == 1 else self.readyD[k]
        if ready is None:
            return None
        term = 1 if self.he[k] else 0
        return (self.oL[f] if origin else self.oD[f]) + (self.rL[u] if term else self.rD[u])

    # ---- search ------------------------------------------------------

    def _select(self, sequential):
        chosen, key = -1, None
        for k in range(self.V):
            if self.state[k] == CLOSED:
                continue
            if sequential:
                return k
            r = self._route_time(k)
            if key is None or r < key:
                chosen, key = k, r
        return chosen

    def _children(self, k, lex):
        """Ordered list of actions for nurse k: ('close',) or ('add', t, origin)."""
        st = self.state[k]
        un = self.unassigned & self.qmask[k]
        cand = []
        bits = un
        while bits:
            low = bits & -bits
            cand.append(low.bit_length() - 1)
            bits ^= low
        if not lex:
            cand.sort(key=lambda t: (self.n_qual[t], self.hi[t], t))
        if st == UNSTARTED and not self.lazy:
            origins = (0, 1) if self.flex else (0,)
            adds = [("add", t, o) for t in cand for o in origins]
        else:
            adds = [("add", t, None) for t in cand]
        close = [("close",)]
        return close + adds if lex else adds + close

    def _complete(self):
        return [tuple(seq) for seq in self.seq]

    def dfs(self, lex=False, target=None):
        self._tick()
        if self.unassigned == 0 and all(s != OPEN for s in self.state):
            self._record(lex, target)
            return
        lb = self.lower_bound()
        if lex:
            if lb > target + TOL:
                return
        elif lb >= self.cutoff() - TOL:
            return
        k = self._select(lex)
        if k < 0:
            return
        for action in self._children(k, lex):
            if action[0] == "close":
                c = self._close_cost(k)
                if c is None:
                    continue
                prev = self.state[k]
                self.state[k] = CLOSED
                self.committed += c
                self.dfs(lex, target)
                self.committed -= c
                self.state[k] = prev
            else:
                t, origin = action[1], action[2]
                rec = self._append(k, t, origin)
                if rec is None:
                    continue
                self.dfs(lex, target)
                self._undo_append(rec, t)

    def _record(self, lex, target):
        # nurses still unstarted here stay idle
        if self.strict and any(not s for s in self.seq):
            return
        cost = self.committed
        routes = self._complete()
        if lex:
            if cost <= target + TOL:
                self.best_cost, self.best_key, self.best_routes = cost, tuple(routes), routes
                raise _Found
            return
        if cost < self.cutoff() - TOL:
            self.best_cost, self.best_key, self.best_routes = cost, tuple(routes), routes
            self.history.append(cost)
            if self.shared is not None:
                with self.shared.get_lock():
                    if cost < self.shared.value:
                        self.shared.value = cost

    def root_bound(self):
        return self.lower_bound()


def _routes_to_solution(instance, mode, routes) -> Solution:
    tasks = instance.tasks
    built = []
    for k, seq in enumerate(routes):
        chosen = [tasks[t] for t in seq]
        services = {t.service for t in chosen}
        if mode == CLASSIC:
            start = end = Endpoint.DEPOT
        else:
            start, end = endpoint_requirements(services, instance)
        times = earliest_start_times(instance, instance.node(start), chosen)
        if times is None:
            raise AssertionError("search produced an infeasible route")
        built.append(Route(k, start, end, tuple(Visit(t, s) for t, s in zip(chosen, times))))
    return make_solution(instance, built)


def _solution_routes(instance, solution):
    ids = instance.task_ids
    routes = [[] for _ in range(instance.num_nurses)]
    for r in solution.routes:
        routes[r.nurse] = [ids[v.task.key] for v in r.visits]
    return routes


def _worker(args):
    instance, mode, strict, lazy, limits, action, shared = args
    s = _Search(instance, mode, strict, lazy, limits, shared)
    k = s._select(False)
    limit_hit = False
    try:
        if action[0] == "close":
            c = s._close_cost(k)
            if c is not None:
                s.state[k] = CLOSED
                s.committed += c
                s.dfs()
        else:
            rec = s._append(k, action[1], action[2])
            if rec is not None:
                s.dfs()
    except _LimitReached:
        limit_hit = True
    return s.best_cost, s.best_routes, s.nodes, limit_hit


_shared_cell = None


def _init_pool(cell):
    global _shared_cell
    _shared_cell = cell


def _pool_worker(args):
    return _worker(args + (_shared_cell,))


def solve_bnb(instance: Instance, mode: str = FLEXIBLE, limits: SearchLimits = SearchLimits(),
              strict_all_nurses: bool = False, lazy_endpoints: bool = True,
              warm_start: bool = True, threads: int = 1, method: str = "auto",
              label_cap: int = 2_000_000) -> SolveOutcome:
    """Exact search over per-nurse task sequences.

    ``method="enumerate"`` grows every nurse's routes with dominance
    pruning and partitions the tasks by memoised subset search;
    ``method="dfs"`` runs the interleaved branch-and-bound described in the
    module docstring.  ``"auto"`` tries enumeration within ``label_cap``
    labels and falls back to the DFS.

    ``lazy_endpoints=False`` branches on each route's origin explicitly
    instead of deferring it (a debugging aid; same optimum).  ``warm_start``
    seeds the incumbent with the heuristic when ``limits.incumbent`` is not
    given.  With ``threads > 1`` the children of the root are explored in
    separate processes sharing the best objective found so far.
    """
    check_mode(mode)
    check_solvable(instance)
    if method not in ("auto", "enumerate", "dfs"):
        raise InvalidArgumentError(f"unknown method {method!r}")
    t0 = time.perf_counter()
    search = _Search(instance, mode, strict_all_nurses, lazy_endpoints, limits)
    root_lb = search.root_bound()

    work = 0
    if method != "dfs" and root_lb < INF:
        try:
            value, routes, work = solve_by_enumeration(
                instance, mode, strict_all_nurses, min(label_cap, limits.node_limit),
                t0 + limits.time_limit)
        except EnumerationAborted:
            if method == "enumerate":
                wall = time.perf_counter() - t0
                return SolveOutcome(UNKNOWN, None, root_lb, limits.node_limit, wall,
                                    {"root_bound": root_lb, "method": "enumerate"})
        else:
            wall = time.perf_counter() - t0
            stats = {"root_bound": root_lb, "method": "enumerate", "tie_break": True}
            if routes is None:
                return SolveOutcome(INFEASIBLE, None, INF, work, wall, stats)
            sol = _routes_to_solution(instance, mode, routes)
            return SolveOutcome(OPTIMAL, sol, sol.objective, work, wall, stats)
        limits = SearchLimits(max(limits.time_limit - (time.perf_counter() - t0), 1e-3),
                              limits.node_limit, limits.incumbent)
        search = _Search(instance, mode, strict_all_nurses, lazy_endpoints, limits)

    incumbent = limits.incumbent
    if incumbent is None and warm_start:
        from .heuristic import HeuristicConfig, solve_heuristic
        h = solve_heuristic(instance, mode, HeuristicConfig(), strict_all_nurses)
        incumbent = h.solution
    if incumbent is not None:
        from .validate import validate
        if validate(instance, incumbent, mode, strict_all_nurses).ok:
            search.best_cost = incumbent.objective
            search.best_routes = _solution_routes(instance, incumbent)
            search.best_key = tuple(tuple(r) for r in search.best_routes)
            search.history.append(incumbent.objective)

    limit_hit = False
    if root_lb == INF:
        pass
    elif threads > 1:
        limit_hit = _parallel(search, instance, mode, strict_all_nurses, lazy_endpoints, limits, threads)
    else:
        try:
            search.dfs()
        except _LimitReached:
            limit_hit = True

    stats = {"root_bound": root_lb, "incumbents": list(search.history), "tie_break": False,
             "method": "dfs"}
    nodes = search.nodes + work
    if search.best_routes is None:
        wall = time.perf_counter() - t0
        status = UNKNOWN if limit_hit else INFEASIBLE
        return SolveOutcome(status, None, root_lb if limit_hit else INF, nodes, wall, stats)

    best_routes = search.best_routes
    if not limit_hit:
        # lexicographic pass for the tie-break among optimal solutions
        remaining = SearchLimits(max(limits.time_limit - (time.perf_counter() - t0), 1e-3),
                                 limits.node_limit)
        lex = _Search(instance, mode, strict_all_nurses, True, remaining, symmetry=False)
        try:
            lex.dfs(lex=True, target=search.best_cost)
        except _Found:
            best_routes = lex.best_routes
            stats["tie_break"] = True
        except _LimitReached:
            pass
        nodes += lex.nodes

    sol = _routes_to_solution(instance, mode, best_routes)
    wall = time.perf_counter() - t0
    if limit_hit:
        return SolveOutcome(FEASIBLE, sol, min(root_lb, sol.objective), nodes, wall, stats)
    return SolveOutcome(OPTIMAL, sol, sol.objective, nodes, wall, stats)


def _parallel(search, instance, mode, strict, lazy, limits, threads):
    k = search._select(False)
    actions = search._children(k, False)
    ctx = mp.get_context("fork" if "fork" in mp.get_all_start_methods() else "spawn")
    cell = ctx.Value("d", search.best_cost)
    jobs = [(instance, mode, strict, lazy, limits, a) for a in actions]
    limit_hit = False
    with ctx.Pool(min(threads, len(jobs), os.cpu_count() or 1) or 1,
                  initializer=_init_pool, initargs=(cell,)) as pool:
        results = pool.map(_pool_worker, jobs)
    for cost, routes, nodes, hit in results:
        search.nodes += nodes
        limit_hit = limit_hit or hit
        if routes is not None and cost < search.best_cost - TOL:
            search.best_cost, search.best_routes = cost, routes
            search.history.append(cost)
    return limit_hit
