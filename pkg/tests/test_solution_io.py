import json

import pytest

from hhcflex.core import FLEXIBLE, Endpoint, Route, make_route, make_solution
from hhcflex.exact import solve_bnb
from hhcflex.exceptions import ParseError
from hhcflex.instances import GenConfig, generate
from hhcflex.solution_io import (
    dumps_solution, parse_route, parse_routes, read_solution, render_route,
    solution_from_dict, write_solution,
)
from hhcflex.validate import validate


def test_render_t1(t1):
    r = make_route(t1, 0, t1.tasks, FLEXIBLE)
    assert render_route(r) == "Depot → S1:1 → S2:2 → Lab"
    assert render_route(Route(0, Endpoint.DEPOT, Endpoint.DEPOT)) == "Depot → Depot"


def test_parse_inverts_render(t1):
    r = make_route(t1, 0, t1.tasks, FLEXIBLE)
    assert parse_route(render_route(r), t1, 0) == r
    assert parse_route("Depot -> S1:1 -> S2:2 -> Lab", t1, 0) == r


@pytest.mark.parametrize("text", ["Depot", "Depot → X1 → Lab", "Home → S1:1 → Lab"])
def test_parse_errors(t1, text):
    with pytest.raises(ParseError):
        parse_route(text, t1, 0)


def test_file_round_trip(tmp_path):
    inst = generate(GenConfig.for_class("small", seed=1))
    sol = solve_bnb(inst, FLEXIBLE).solution
    path = tmp_path / "s.json"
    write_solution(sol, path, FLEXIBLE, inst.name)
    back, mode = read_solution(path, inst)
    assert mode == FLEXIBLE
    assert back == sol
    assert validate(inst, back, FLEXIBLE).ok
    assert parse_routes([render_route(r) for r in sol.routes], inst).objective == pytest.approx(sol.objective)
    doc = json.loads(path.read_text())
    assert doc["instance"] == inst.name
    assert min(r["nurse"] for r in doc["routes"]) == 1


def test_unknown_task_is_kept_for_the_validator(t1):
    sol = make_solution(t1, [make_route(t1, 0, t1.tasks, FLEXIBLE)])
    doc = json.loads(dumps_solution(sol, FLEXIBLE))
    doc["routes"][0]["visits"][0]["service"] = 2
    back, _ = solution_from_dict(doc, t1)
    assert "PARTITION" in validate(t1, back, FLEXIBLE).tags


@pytest.mark.parametrize("doc", [
    [], {"routes": 3}, {"routes": [5], "objective": 0},
    {"routes": [{"nurse": "a"}], "objective": 0},
    {"routes": [{"nurse": 1, "start": "Home"}], "objective": 0},
    {"routes": [{"nurse": 1, "visits": [{"patient": 1, "service": 1, "start_time": "x"}]}],
     "objective": 0},
    {"routes": [], "objective": None},
])
def test_bad_solution_documents(t1, doc):
    with pytest.raises(ParseError):
        solution_from_dict(doc, t1)


def test_invalid_json(tmp_path, t1):
    p = tmp_path / "s.json"
    p.write_text("[")
    with pytest.raises(ParseError):
        read_solution(p, t1)
