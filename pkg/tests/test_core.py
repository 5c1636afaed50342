import numpy as np
import pytest

from hhcflex.core import (
    CLASSIC, FLEXIBLE, Endpoint, Instance, Solution, earliest_start_times,
    endpoint_requirements, expand_tasks, make_route, make_solution, objective, route_travel,
)
from hhcflex.exceptions import InvalidArgumentError, SchemaError
from hhcflex.instances import generate, GenConfig, default_endpoint_flags


def test_expand_tasks_order_and_fields(t1):
    tasks = expand_tasks(t1)
    assert [(t.patient, t.service) for t in tasks] == [(1, 0), (2, 1)]
    assert tasks[0].duration == 5.0
    assert tasks[1].window == (0.0, 1000.0)
    assert t1.tasks == tuple(tasks)
    assert t1.task_ids == {(1, 0): 0, (2, 1): 1}


def test_task_label_is_one_based_service(t1):
    assert t1.tasks[1].label() == "S2:2"


def test_endpoint_requirements_default_flags():
    inst = generate(GenConfig.for_class("small", seed=1))
    start, end = default_endpoint_flags()
    assert list(inst.start_req) == start and list(inst.end_req) == end
    assert endpoint_requirements([], inst) == (Endpoint.DEPOT, Endpoint.DEPOT)
    assert endpoint_requirements([0, 1], inst) == (Endpoint.DEPOT, Endpoint.DEPOT)
    assert endpoint_requirements([5], inst) == (Endpoint.LAB, Endpoint.DEPOT)
    assert endpoint_requirements([2], inst) == (Endpoint.DEPOT, Endpoint.LAB)
    assert endpoint_requirements([2, 5, 0], inst) == (Endpoint.LAB, Endpoint.LAB)


def test_endpoint_requirements_rejects_bad_service(t1):
    with pytest.raises(InvalidArgumentError):
        endpoint_requirements([7], t1)


def test_route_travel_and_objective(t1):
    r = make_route(t1, 0, t1.tasks, FLEXIBLE)
    assert (r.start, r.end) == (Endpoint.DEPOT, Endpoint.LAB)
    assert route_travel(t1, r.start, r.end, [1, 2]) == 35.0
    assert objective(t1, Solution((r,))) == 35.0
    c = make_route(t1, 0, t1.tasks, CLASSIC)
    assert (c.start, c.end) == (Endpoint.DEPOT, Endpoint.DEPOT)
    assert make_solution(t1, [c]).objective == 40.0
    assert route_travel(t1, Endpoint.DEPOT, Endpoint.LAB, []) == 0.0


def test_earliest_start_times_wait_and_fail(t1):
    assert earliest_start_times(t1, 0, t1.tasks) == [10.0, 25.0]
    tight = t1.replace(window_lo=[50, 0], window_hi=[60, 20])
    assert earliest_start_times(tight, 0, tight.tasks[:1]) == [50.0]
    assert earliest_start_times(tight, 0, tight.tasks) is None
    assert make_route(tight, 0, tight.tasks) is None


def test_instance_arrays_are_read_only(t1):
    with pytest.raises(ValueError):
        t1.travel_time[0, 1] = 3.0


@pytest.mark.parametrize("change", [
    {"travel_time": np.zeros((3, 3))},
    {"num_patients": 0},
    {"qualification": [[1, 2]]},
    {"travel_time": [[0, -1, 0, 0]] * 4},
    {"start_req": [0]},
])
def test_instance_schema_errors(t1, change):
    with pytest.raises(SchemaError):
        t1.replace(**change)


def test_instance_node_indices(t1):
    assert t1.lab == 3
    assert t1.node(Endpoint.DEPOT) == 0 and t1.node(Endpoint.LAB) == 3
    assert isinstance(t1, Instance)
