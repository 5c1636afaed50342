"""Home health care routing with flexible depot/lab route endpoints."""
from .core import (
    CLASSIC, FLEXIBLE, Endpoint, Instance, Route, Solution, Task, Visit,
    endpoint_requirements, expand_tasks, objective,
)
from .estimator import ExactRouter, HeuristicRouter
from .exact import SearchLimits, SolveOutcome, solve_bnb, solve_bruteforce
from .heuristic import HeuristicConfig, construct_greedy, improve_local_search, solve_heuristic
from .instances import GenConfig, generate, read_instance, tiny_T1, write_instance
from .milp import build_milp, export_lp, extract_solution
from .validate import ValidationReport, validate

__version__ = "0.1.0"

__all__ = [
    "CLASSIC", "FLEXIBLE", "Endpoint", "Instance", "Route", "Solution", "Task", "Visit",
    "endpoint_requirements", "expand_tasks", "objective",
    "ExactRouter", "HeuristicRouter",
    "SearchLimits", "SolveOutcome", "solve_bnb", "solve_bruteforce",
    "HeuristicConfig", "construct_greedy", "improve_local_search", "solve_heuristic",
    "GenConfig", "generate", "read_instance", "tiny_T1", "write_instance",
    "build_milp", "export_lp", "extract_solution",
    "ValidationReport", "validate",
]
