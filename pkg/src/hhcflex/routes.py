"""Per-nurse route enumeration and exact task partitioning.

For each skill profile, every feasible route is grown task by task from
each admissible origin, with earliest-start propagation.  Two partial
routes with the same task set and the same last task are compared by
(travel so far, ready time); the dominated one is dropped.  Ties in travel
keep the lexicographically smaller sequence, so each task set ends up with
its cheapest route and, among the cheapest, the smallest sequence.

The nurses' tables are then combined by a memoised search over subsets of
the task set.  Masks are stored as int64, so at most 62 tasks are handled.
"""
from __future__ import annotations

import time

import numpy as np

from .core import FLEXIBLE, Instance

TOL = 1e-9
INF = float("inf")
MAX_TASKS = 62


class EnumerationAborted(Exception):
    """Label or time budget exhausted."""


class RouteTable:
    """Cheapest route of one nurse for every coverable task set."""

    def __init__(self, entries: dict[int, tuple[float, tuple[int, ...]]]):
        order = sorted(entries)
        self.masks = np.array(order, dtype=np.int64)
        self.costs = np.array([entries[m][0] for m in order], dtype=float)
        self.seqs = [entries[m][1] for m in order]
        self.index = {m: j for j, m in enumerate(order)}

    def __len__(self):
        return len(self.seqs)

    def cost(self, mask: int) -> float:
        j = self.index.get(mask)
        return INF if j is None else float(self.costs[j])

    def candidates(self, within: int, must: int) -> np.ndarray:
        """Positions of masks m with must ⊆ m ⊆ within."""
        m = self.masks
        ok = ((m & np.int64(~within)) == 0) & ((m & np.int64(must)) == must)
        return np.flatnonzero(ok)


class _Budget:
    def __init__(self, label_cap, deadline):
        self.cap = label_cap
        self.deadline = deadline
        self.count = 0

    def spend(self, n=1):
        self.count += n
        if self.count > self.cap:
            raise EnumerationAborted("label budget exhausted")
        if self.count & 4095 == 0 and time.perf_counter() > self.deadline:
            raise EnumerationAborted("time budget exhausted")


def _dominates(a, b):
    """Label a = (cost, ready, seq) makes b redundant."""
    if a[1] > b[1]:
        return False
    if a[0] < b[0] - TOL:
        return True
    return a[0] <= b[0] + TOL and a[2] <= b[2]


def _profile_table(instance: Instance, mode: str, allowed: list[int], strict: bool,
                   budget: _Budget) -> RouteTable:
    tasks = instance.tasks
    tt = instance.travel_time.tolist()
    lab = instance.lab
    flex = mode == FLEXIBLE
    P = [t.patient for t in tasks]
    lo = [t.window[0] for t in tasks]
    hi = [t.window[1] for t in tasks]
    dur = [t.duration for t in tasks]
    sflag = [flex and bool(instance.start_req[t.service]) for t in tasks]
    eflag = [flex and bool(instance.end_req[t.service]) for t in tasks]
    smask = sum(1 << t for t in range(len(tasks)) if sflag[t])
    emask = sum(1 << t for t in range(len(tasks)) if eflag[t])

    best: dict[int, tuple[float, tuple[int, ...]]] = {}
    if not strict:
        best[0] = (0.0, ())

    origins = (0, lab) if flex and any(sflag[t] for t in allowed) else (0,)
    for origin in origins:
        # a depot route may not carry a start-at-lab service; a lab route must
        usable = [t for t in allowed if origin == lab or not sflag[t]]
        front: dict[tuple[int, int], list] = {}
        for t in usable:
            leg = tt[origin][P[t]]
            begin = max(leg, lo[t])
            if begin <= hi[t]:
                budget.spend()
                front[1 << t, t] = [(leg, begin + dur[t], (t,))]
        while front:
            nxt: dict[tuple[int, int], list] = {}
            for (mask, last), labels in front.items():
                if origin == 0 or mask & smask:
                    ret = tt[P[last]][lab if mask & emask else 0]
                    for cost, _, seq in labels:
                        total = cost + ret
                        cur = best.get(mask)
                        if (cur is None or total < cur[0] - TOL
                                or (total <= cur[0] + TOL and seq < cur[1])):
                            best[mask] = (total, seq)
                row = tt[P[last]]
                for t in usable:
                    if mask >> t & 1:
                        continue
                    leg = row[P[t]]
                    bucket = None
                    for cost, ready, seq in labels:
                        begin = ready + leg
                        if begin < lo[t]:
                            begin = lo[t]
                        if begin > hi[t]:
                            continue
                        new = (cost + leg, begin + dur[t], seq + (t,))
                        if bucket is None:
                            bucket = nxt.setdefault((mask | 1 << t, t), [])
                        if any(_dominates(a, new) for a in bucket):
                            continue
                        bucket[:] = [a for a in bucket if not _dominates(new, a)]
                        bucket.append(new)
                        budget.spend()
            front = nxt
    return RouteTable(best)


def build_tables(instance: Instance, mode: str, strict: bool = False,
                 label_cap: int = 2_000_000, deadline: float = INF) -> tuple[list[RouteTable], int]:
    """One table per nurse (shared between nurses with identical skills)."""
    if len(instance.tasks) > MAX_TASKS:
        raise EnumerationAborted(f"more than {MAX_TASKS} tasks")
    budget = _Budget(label_cap, deadline)
    by_profile: dict[tuple[int, ...], RouteTable] = {}
    tables = []
    for k in range(instance.num_nurses):
        allowed = [t for t, task in enumerate(instance.tasks)
                   if instance.qualification[k, task.service]]
        key = tuple(allowed)
        if key not in by_profile:
            by_profile[key] = _profile_table(instance, mode, allowed, strict, budget)
        tables.append(by_profile[key])
    return tables, budget.count


class Partitioner:
    """Minimum total cost of covering a task set with a group of nurses."""

    def __init__(self, tables: list[RouteTable], qmasks: list[int], deadline: float = INF):
        self.tables = tables
        self.qmasks = qmasks
        self.deadline = deadline
        self.memo: dict[tuple[tuple[int, ...], int], float] = {}
        self.evaluated = 0

    def _must(self, k, group, within):
        others = 0
        for j in group:
            if j != k:
                others |= self.qmasks[j]
        return within & ~others

    def value(self, group: tuple[int, ...], within: int) -> float:
        if not group:
            return 0.0 if within == 0 else INF
        key = (group, within)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        if time.perf_counter() > self.deadline:
            raise EnumerationAborted("time budget exhausted")
        cover = 0
        for k in group:
            cover |= self.qmasks[k]
        if within & ~cover:
            out = INF
        elif len(group) == 1:
            out = self.tables[group[0]].cost(within)
        else:
            outer = min(group, key=lambda k: (len(self.tables[k]), k))
            rest = tuple(k for k in group if k != outer)
            table = self.tables[outer]
            pos = table.candidates(within, self._must(outer, group, within))
            self.evaluated += len(pos)
            if len(rest) == 1:
                out = self._pair(table, pos, self.tables[rest[0]], within)
            else:
                out = INF
                for j in pos[np.argsort(table.costs[pos], kind="stable")]:
                    c = float(table.costs[j])
                    if c >= out:
                        break
                    out = min(out, c + self.value(rest, within ^ int(table.masks[j])))
        self.memo[key] = out
        return out

    @staticmethod
    def _pair(outer, pos, inner, within):
        if not len(pos) or not len(inner):
            return INF
        rest = outer.masks[pos] ^ np.int64(within)
        idx = np.searchsorted(inner.masks, rest)
        idx[idx == len(inner)] = 0
        hit = inner.masks[idx] == rest
        if not hit.any():
            return INF
        totals = outer.costs[pos][hit] + inner.costs[idx[hit]]
        return float(totals.min())

    def lexmin(self, full: int) -> tuple[float, list[tuple[int, ...]]] | None:
        """Optimal value and the per-nurse sequences of the smallest optimum."""
        V = len(self.tables)
        everyone = tuple(range(V))
        target = self.value(everyone, full)
        if target == INF:
            return None
        routes = []
        within, remaining = full, target
        for k in range(V):
            rest = everyone[k + 1:]
            table = self.tables[k]
            pos = table.candidates(within, self._must(k, everyone[k:], within))
            pick = None
            for j in pos:
                c = float(table.costs[j])
                if c > remaining + TOL:
                    continue
                r = self.value(rest, within ^ int(table.masks[j]))
                if c + r <= remaining + TOL and (pick is None or table.seqs[j] < table.seqs[pick]):
                    pick = j
            if pick is None:  # only reachable through float drift
                return None
            routes.append(table.seqs[pick])
            within ^= int(table.masks[pick])
            remaining -= float(table.costs[pick])
        return target, routes


def solve_by_enumeration(instance: Instance, mode: str, strict: bool = False,
                         label_cap: int = 2_000_000, deadline: float = INF):
    """(objective, routes, work) or (None, None, work) when infeasible.

    Raises :class:`EnumerationAborted` when a budget runs out.
    """
    tables, labels = build_tables(instance, mode, strict, label_cap, deadline)
    qmasks = [sum(1 << t for t, task in enumerate(instance.tasks)
                  if instance.qualification[k, task.service])
              for k in range(instance.num_nurses)]
    part = Partitioner(tables, qmasks, deadline)
    found = part.lexmin((1 << len(instance.tasks)) - 1)
    work = labels + part.evaluated
    if found is None:
        return None, None, work
    return found[0], found[1], work
