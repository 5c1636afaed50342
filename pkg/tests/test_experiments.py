import csv
import io

import pytest

from hhcflex.core import CLASSIC, FLEXIBLE, Endpoint
from hhcflex.exceptions import InvalidArgumentError
from hhcflex.experiments import (
    SolverOptions, SweepSpec, apply_variant, compare, fmt_objective, run_solver, sweep,
    sweep_table, to_csv,
)


def test_compare_t1(t1):
    report = compare(t1)
    assert report.objective(CLASSIC) == 40 and report.objective(FLEXIBLE) == 35
    assert report.endpoint_changes() == [(0, "end", "Depot", "Lab")]
    assert report.renderings(FLEXIBLE) == ["Depot → S1:1 → S2:2 → Lab"]
    assert report.changed_nurses() == []
    rows = report.table_rows(timing=False)
    assert rows[1][:3] == ["classic", "optimal", "40.000"]
    assert rows[2][:3] == ["flexible", "optimal", "35.000"]
    assert rows[2][-1] == ""
    assert "Nurse1 end changes Depot -> Lab" in report.summary()


def test_compare_with_zero_flags_is_identical(t1):
    report = compare(t1.replace(end_req=[0, 0]))
    assert report.objective(CLASSIC) == report.objective(FLEXIBLE) == 40
    assert report.endpoint_changes() == []


def test_sweep_t1_service_2(t1):
    spec = SweepSpec(t1, 2, ("none", "start_lab", "end_lab"))
    rows = sweep(spec)
    # start_lab: L -> P2 -> P1 -> D = 15 + 10 + 10
    assert [r.objective for r in rows] == [40, 35, 35]
    assert rows[1].outcome.solution.routes[0].start is Endpoint.LAB
    assert [v.task.patient for v in rows[1].outcome.solution.routes[0].visits] == [2, 1]
    assert rows[2].outcome.solution.routes[0].end is Endpoint.LAB
    assert rows[0].changed == [] and rows[1].changed == [0] and rows[2].changed == [0]
    table = sweep_table(rows, spec, timing=False)
    assert table[0][2] == "Feature of service #2"
    assert [r[2] for r in table[1:]] == ["None", "Needs to start from lab", "Needs to end at lab"]
    assert table[3][8] == "Nurse1" and table[3][7] == ""
    assert list(csv.reader(io.StringIO(to_csv(table)))) == table


def test_none_variant_clears_the_flags(t1):
    inst = apply_variant(t1, 2, "none")
    assert list(inst.end_req) == [0, 0]
    assert run_solver(inst, FLEXIBLE).objective == 40


@pytest.mark.parametrize("kwargs", [
    {"target_service": 0}, {"target_service": 3}, {"variants": ()}, {"variants": ("sideways",)},
    {"solver": "bruteforce"},
])
def test_sweep_spec_errors(t1, kwargs):
    args = {"instance": t1, "target_service": 1, **kwargs}
    with pytest.raises(InvalidArgumentError):
        SweepSpec(**args)


def test_solver_options_errors():
    with pytest.raises(InvalidArgumentError):
        SolverOptions(solver="cplex")
    with pytest.raises(InvalidArgumentError):
        SolverOptions(threads=0)


def test_run_solver_each_backend(t1):
    for name in ("exact", "heuristic", "bruteforce"):
        assert run_solver(t1, FLEXIBLE, SolverOptions(solver=name)).objective == 35


def test_fmt_objective():
    assert fmt_objective(None) == "infeasible"
    assert fmt_objective(654.5964) == "654.596"
