"""Coercion and checks for public entry points."""
from __future__ import annotations

import os
from numbers import Integral

from ..core import MODES, Instance, Solution
from ..core import check_mode as _core_check_mode
from ..exceptions import InvalidArgumentError


def check_instance(obj, require_covered: bool = True) -> Instance:
    """Accept an Instance, a decoded instance dict or a path to an instance file."""
    from ..instances import instance_from_dict, read_instance

    if isinstance(obj, Instance):
        inst = obj
    elif isinstance(obj, dict):
        inst = instance_from_dict(obj)
    elif isinstance(obj, (str, os.PathLike)):
        inst = read_instance(obj)
    else:
        raise InvalidArgumentError(f"expected an Instance, dict or path, got {type(obj).__name__}")
    if require_covered and inst.uncovered_demands():
        i, s = inst.uncovered_demands()[0]
        raise InvalidArgumentError(f"service {s + 1} of patient {i} has no qualified nurse")
    return inst


def check_mode(mode) -> str:
    if not isinstance(mode, str):
        raise InvalidArgumentError(f"mode must be one of {MODES}")
    return _core_check_mode(mode)


def check_seed(seed) -> int:
    if isinstance(seed, bool) or not isinstance(seed, Integral) or not 0 <= seed < 2**64:
        raise InvalidArgumentError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    return int(seed)


def check_solution(solution, instance: Instance) -> Solution:
    if not isinstance(solution, Solution):
        raise InvalidArgumentError(f"expected a Solution, got {type(solution).__name__}")
    for r in solution.routes:
        if not 0 <= r.nurse < instance.num_nurses:
            raise InvalidArgumentError(f"route names unknown nurse {r.nurse}")
    return solution
