import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hhcflex.exceptions import GenerationError, InvalidArgumentError, ParseError, SchemaError
from hhcflex.instances import (
    SIZE_CLASSES, GenConfig, dumps_instance, generate, instance_from_dict, instance_to_dict,
    read_instance, tiny_T1, write_instance,
)


def test_size_classes():
    assert SIZE_CLASSES == {"small": (10, 3, 6), "medium": (15, 5, 6), "large": (25, 5, 6)}
    for size, (n, V, S) in SIZE_CLASSES.items():
        inst = generate(GenConfig.for_class(size, seed=7))
        assert (inst.num_patients, inst.num_nurses, inst.num_services) == (n, V, S)


def test_generation_is_deterministic():
    a = generate(GenConfig.for_class("small", seed=42))
    b = generate(GenConfig.for_class("small", seed=42))
    c = generate(GenConfig.for_class("small", seed=43))
    assert dumps_instance(a) == dumps_instance(b)
    assert dumps_instance(a) != dumps_instance(c)


def test_generated_fields_are_well_formed():
    inst = generate(GenConfig.for_class("medium", seed=3))
    tt = inst.travel_time
    assert np.allclose(tt, tt.T) and np.all(np.diag(tt) == 0)
    assert np.allclose(inst.window_hi - inst.window_lo, 120.0)
    d = inst.service_duration[inst.demand == 1]
    assert d.min() >= 10 and d.max() <= 20
    assert np.all(inst.service_duration[inst.demand == 0] == 0)
    assert inst.demand.sum(axis=1).min() >= 1
    assert not inst.uncovered_demands()


def test_json_round_trip(tmp_path):
    inst = generate(GenConfig.for_class("small", seed=5))
    path = tmp_path / "i.json"
    write_instance(inst, path)
    back = read_instance(path)
    assert dumps_instance(back) == path.read_text()
    assert back.name == inst.name and np.array_equal(back.travel_time, inst.travel_time)


def test_t1_fixture_shape():
    t1 = tiny_T1()
    assert (t1.num_patients, t1.num_nurses, t1.num_services) == (2, 1, 2)
    assert list(t1.end_req) == [0, 1] and list(t1.start_req) == [0, 0]


@pytest.mark.parametrize("mutate, error", [
    (lambda d: d.pop("demand"), ParseError),
    (lambda d: d.update(extra=1), ParseError),
    (lambda d: d.update(num_nurses="3"), ParseError),
    (lambda d: d.update(window_lo=["a", 0]), ParseError),
    (lambda d: d.update(window_lo=[float("nan"), 0]), ParseError),
    (lambda d: d.update(demand=[[1, 0]]), SchemaError),
    (lambda d: d.update(qualification=[[1, 0]]), SchemaError),
])
def test_bad_documents(mutate, error):
    data = instance_to_dict(tiny_T1())
    mutate(data)
    with pytest.raises(error):
        instance_from_dict(data)


def test_invalid_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ParseError):
        read_instance(path)
    with pytest.raises(ParseError):
        instance_from_dict([1, 2])


@pytest.mark.parametrize("kwargs", [
    {"demand_density": 0.0}, {"qualification_density": 1.5}, {"window_width": 0.0},
    {"horizon": 10.0}, {"duration_min": 5, "duration_max": 2}, {"seed": -1},
    {"start_req": (1, 0)}, {"area_side": 0.0},
])
def test_config_errors(kwargs):
    with pytest.raises(InvalidArgumentError):
        GenConfig(**kwargs)


def test_unknown_size_class():
    with pytest.raises(InvalidArgumentError):
        GenConfig.for_class("huge")


def test_generation_errors():
    with pytest.raises(GenerationError):
        generate(GenConfig(num_nurses=0))
    with pytest.raises(GenerationError):
        generate(GenConfig(depot_xy=(5.0, 5.0), lab_xy=(5.0, 5.0)))


@settings(max_examples=500, deadline=None)
@given(
    n=st.integers(1, 12), V=st.integers(1, 5), S=st.integers(1, 7),
    dd=st.floats(0.05, 1.0), qd=st.floats(0.05, 1.0), seed=st.integers(0, 2**64 - 1),
)
def test_generator_output_always_valid(n, V, S, dd, qd, seed):
    inst = generate(GenConfig(num_patients=n, num_nurses=V, num_services=S,
                              demand_density=dd, qualification_density=qd, seed=seed))
    assert not inst.uncovered_demands()
    assert inst.demand.sum(axis=1).min() >= 1
    assert np.all(inst.window_lo >= 0) and np.all(inst.window_hi <= 1200.0 + 1e-9)
    assert np.all(inst.travel_time >= 0)
    back = instance_from_dict(json.loads(dumps_instance(inst)))
    assert dumps_instance(back) == dumps_instance(inst)
