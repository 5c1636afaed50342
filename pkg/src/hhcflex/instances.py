"""Instance generation, canonical fixtures and JSON file I/O."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import Instance
from .exceptions import GenerationError, InvalidArgumentError, ParseError, SchemaError

# (patients, nurses, services) per benchmark size class.
SIZE_CLASSES = {
    "small": (10, 3, 6),
    "medium": (15, 5, 6),
    "large": (25, 5, 6),
}

INSTANCE_FIELDS = (
    "name", "num_patients", "num_nurses", "num_services", "travel_time",
    "service_duration", "window_lo", "window_hi", "qualification", "demand",
    "start_req", "end_req",
)


def default_endpoint_flags(num_services: int = 6) -> tuple[list[int], list[int]]:
    """Default endpoint flags: service 6 starts at the lab, service 3 ends there."""
    start = [0] * num_services
    end = [0] * num_services
    if num_services >= 6:
        start[5] = 1
    if num_services >= 3:
        end[2] = 1
    return start, end


@dataclass(frozen=True)
class GenConfig:
    num_patients: int = 10
    num_nurses: int = 3
    num_services: int = 6
    area_side: float = 100.0
    demand_density: float = 0.3
    qualification_density: float = 0.5
    window_width: float = 120.0
    horizon: float = 1200.0
    start_req: tuple[int, ...] | None = None
    end_req: tuple[int, ...] | None = None
    seed: int = 0
    duration_min: int = 10
    duration_max: int = 20
    depot_xy: tuple[float, float] | None = None
    lab_xy: tuple[float, float] | None = None
    name: str | None = field(default=None)

    def __post_init__(self):
        if self.num_patients < 1 or self.num_services < 1 or self.num_nurses < 0:
            raise InvalidArgumentError("num_patients and num_services must be positive")
        for key in ("demand_density", "qualification_density"):
            p = getattr(self, key)
            if not 0 < p <= 1:
                raise InvalidArgumentError(f"{key} must lie in (0, 1], got {p}")
        if not self.horizon >= self.window_width > 0:
            raise InvalidArgumentError("need horizon >= window_width > 0")
        if not 0 <= self.duration_min <= self.duration_max:
            raise InvalidArgumentError("need 0 <= duration_min <= duration_max")
        if self.area_side <= 0:
            raise InvalidArgumentError("area_side must be positive")
        if not 0 <= self.seed < 2**64:
            raise InvalidArgumentError("seed must be a 64-bit unsigned integer")
        default_start, default_end = default_endpoint_flags(self.num_services)
        for key, default in (("start_req", default_start), ("end_req", default_end)):
            value = getattr(self, key)
            value = tuple(int(v) for v in (default if value is None else value))
            if len(value) != self.num_services or any(v not in (0, 1) for v in value):
                raise InvalidArgumentError(f"{key} must be a 0/1 vector of length {self.num_services}")
            object.__setattr__(self, key, value)

    @classmethod
    def for_class(cls, size: str, seed: int = 0, **overrides) -> "GenConfig":
        try:
            n, V, S = SIZE_CLASSES[size]
        except KeyError:
            raise InvalidArgumentError(f"unknown size class {size!r}") from None
        return cls(num_patients=n, num_nurses=V, num_services=S, seed=seed, **overrides)


def generate(config: GenConfig) -> Instance:
    """Draw a random instance; identical configs give identical instances."""
    n, V, S = config.num_patients, config.num_nurses, config.num_services
    if V < 1:
        raise GenerationError("cannot give every service a qualified nurse without nurses")
    rng = np.random.default_rng(config.seed)
    side = config.area_side

    patients = rng.uniform(0.0, side, size=(n, 2))
    depot = np.array(config.depot_xy if config.depot_xy is not None else (0.0, 0.0))
    lab = np.array(config.lab_xy if config.lab_xy is not None else (side, side))
    if np.array_equal(depot, lab):
        raise GenerationError("depot and lab must be placed at distinct points")
    coords = np.vstack([depot, patients, lab])
    diff = coords[:, None, :] - coords[None, :, :]
    travel = np.round(np.sqrt((diff ** 2).sum(axis=-1)), 3)

    demand = (rng.random((n, S)) < config.demand_density).astype(np.int8)
    for i in np.flatnonzero(demand.sum(axis=1) == 0):
        demand[i, rng.integers(S)] = 1

    qual = (rng.random((V, S)) < config.qualification_density).astype(np.int8)
    for s in np.flatnonzero(qual.sum(axis=0) == 0):
        qual[rng.integers(V), s] = 1

    durations = rng.integers(config.duration_min, config.duration_max + 1, size=(n, S)).astype(float)
    durations[demand == 0] = 0.0

    opens = np.round(rng.uniform(0.0, config.horizon - config.window_width, size=n), 3)
    closes = opens + config.window_width

    name = config.name or f"gen-n{n}-v{V}-s{S}-seed{config.seed}"
    return Instance(
        name=name,
        num_patients=n,
        num_nurses=V,
        num_services=S,
        travel_time=travel,
        service_duration=durations,
        window_lo=opens,
        window_hi=closes,
        qualification=qual,
        demand=demand,
        start_req=list(config.start_req),
        end_req=list(config.end_req),
    )


def tiny_T1() -> Instance:
    """Two patients, one nurse; only patient 2's service must end at the lab.

    Flexible optimum is D -> P1 -> P2 -> L (35), classic optimum
    D -> P1 -> P2 -> D (40).
    """
    # nodes: depot, P1, P2, lab
    travel = [
        [0, 10, 20, 30],
        [10, 0, 10, 25],
        [20, 10, 0, 15],
        [30, 25, 15, 0],
    ]
    return Instance(
        name="T1",
        num_patients=2,
        num_nurses=1,
        num_services=2,
        travel_time=travel,
        service_duration=[[5, 5], [5, 5]],
        window_lo=[0, 0],
        window_hi=[1000, 1000],
        qualification=[[1, 1]],
        demand=[[1, 0], [0, 1]],
        start_req=[0, 0],
        end_req=[0, 1],
    )


def instance_to_dict(instance: Instance) -> dict:
    out = {}
    for key in INSTANCE_FIELDS:
        value = getattr(instance, key)
        if isinstance(value, np.ndarray):
            value = value.tolist()
        out[key] = value
    return out


def instance_from_dict(data) -> Instance:
    if not isinstance(data, dict):
        raise ParseError("instance document must be a JSON object")
    unknown = sorted(set(data) - set(INSTANCE_FIELDS))
    if unknown:
        raise ParseError(f"unknown field {unknown[0]}")
    for key in INSTANCE_FIELDS:
        if key not in data:
            raise ParseError(f"missing field {key}")
    if not isinstance(data["name"], str):
        raise ParseError("field name: expected a string")
    for key in ("num_patients", "num_nurses", "num_services"):
        if not isinstance(data[key], int) or isinstance(data[key], bool):
            raise ParseError(f"field {key}: expected an integer")
    for key in INSTANCE_FIELDS[4:]:
        _check_numeric(data[key], key)
    instance = Instance(**{key: data[key] for key in INSTANCE_FIELDS})
    uncovered = instance.uncovered_demands()
    if uncovered:
        i, s = uncovered[0]
        raise SchemaError(f"service {s + 1} demanded by patient {i} has no qualified nurse")
    return instance


def _check_numeric(value, key):
    def walk(v):
        if isinstance(v, list):
            for item in v:
                walk(item)
        elif isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ParseError(f"field {key}: non-numeric entry {v!r}")
        elif not math.isfinite(v):
            raise ParseError(f"field {key}: non-finite entry {v!r}")
    if not isinstance(value, list):
        raise ParseError(f"field {key}: expected an array")
    walk(value)


def dumps_instance(instance: Instance) -> str:
    return json.dumps(instance_to_dict(instance), indent=1) + "\n"


def write_instance(instance: Instance, path) -> None:
    Path(path).write_text(dumps_instance(instance), encoding="utf-8")


def read_instance(path) -> Instance:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from None
    return instance_from_dict(data)
