"""Estimator-style wrappers (``fit`` / ``predict`` / ``score``) around the solvers.

``fit`` solves one instance and keeps the result; ``predict`` returns the
route renderings; ``score`` is the negated travel time, so higher is better
as model-selection tools expect.
"""
from __future__ import annotations

from sklearn.base import BaseEstimator

from .core import FLEXIBLE
from .exact import SearchLimits, solve_bnb
from .exceptions import InvalidArgumentError
from .heuristic import HeuristicConfig, solve_heuristic
from .solution_io import render_route
from .utils.validation import check_instance, check_mode, check_seed
from .validate import validate


class _RouterBase(BaseEstimator):
    def fit(self, X, y=None):
        instance = check_instance(X)
        mode = check_mode(self.mode)
        self.outcome_ = self._solve(instance, mode)
        self.instance_ = instance
        self.solution_ = self.outcome_.solution
        self.status_ = self.outcome_.status
        self.objective_ = self.outcome_.objective
        return self

    def _check_fitted(self):
        if not hasattr(self, "outcome_"):
            raise InvalidArgumentError(f"{type(self).__name__} is not fitted; call fit first")

    def predict(self, X=None) -> list[str]:
        """Arrow rendering of each nurse's route (refits when given a new instance)."""
        if X is not None and (not hasattr(self, "instance_") or check_instance(X) != self.instance_):
            self.fit(X)
        self._check_fitted()
        if self.solution_ is None:
            return []
        return [render_route(r) for r in self.solution_.routes]

    def score(self, X=None, y=None) -> float:
        self.predict(X)
        if self.solution_ is None:
            return float("-inf")
        report = validate(self.instance_, self.solution_, self.mode, self.strict_all_nurses)
        if not report.ok:
            raise AssertionError(str(report))
        return -self.solution_.objective


class ExactRouter(_RouterBase):
    def __init__(self, mode=FLEXIBLE, time_limit=300.0, node_limit=50_000_000,
                 strict_all_nurses=False, threads=1):
        self.mode = mode
        self.time_limit = time_limit
        self.node_limit = node_limit
        self.strict_all_nurses = strict_all_nurses
        self.threads = threads

    def _solve(self, instance, mode):
        limits = SearchLimits(float(self.time_limit), int(self.node_limit))
        return solve_bnb(instance, mode, limits, bool(self.strict_all_nurses),
                         threads=int(self.threads))


class HeuristicRouter(_RouterBase):
    def __init__(self, mode=FLEXIBLE, seed=0, iteration_budget=10_000, restarts=64,
                 strict_all_nurses=False):
        self.mode = mode
        self.seed = seed
        self.iteration_budget = iteration_budget
        self.restarts = restarts
        self.strict_all_nurses = strict_all_nurses

    def _solve(self, instance, mode):
        config = HeuristicConfig(seed=check_seed(self.seed),
                                 iteration_budget=int(self.iteration_budget),
                                 restarts=int(self.restarts))
        return solve_heuristic(instance, mode, config, bool(self.strict_all_nurses))
