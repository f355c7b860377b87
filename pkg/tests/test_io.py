"""Tests for the JSON instance/result file formats."""

import json
import math

import pytest

from waterline import (
    AscendingProblem, BoxProblem, FairProblem, LogCapacity, SchemaError,
    SimplexProblem, SolverConfig, instance_from_dict, instance_to_dict,
    load_instance, problem_class, result_to_dict, save_instance, solve_box)

from conftest import random_ascending, random_box, random_simplex


def _round_trip(problem):
    return instance_from_dict(json.loads(json.dumps(instance_to_dict(problem))))


def test_simplex_round_trip(rng):
    problem = random_simplex("log_capacity", rng, 3, with_lower=True)
    clone = _round_trip(problem)
    assert isinstance(clone, SimplexProblem)
    assert clone.budget == problem.budget
    assert clone.lower_bounds == problem.lower_bounds
    assert [o.to_params() for o in clone.objectives] == \
        [o.to_params() for o in problem.objectives]
    assert instance_to_dict(clone) == instance_to_dict(problem)


def test_box_round_trip_with_infinite_upper(rng):
    problem = random_box("inverse_mse", rng, 4)
    clone = _round_trip(problem)
    assert isinstance(clone, BoxProblem)
    assert clone.upper_bounds == problem.upper_bounds
    assert instance_to_dict(clone) == instance_to_dict(problem)


def test_ascending_round_trip(rng):
    problem = random_ascending("af_relay", rng, 3)
    clone = _round_trip(problem)
    assert isinstance(clone, AscendingProblem)
    assert clone.prefix_budgets == problem.prefix_budgets
    assert instance_to_dict(clone) == instance_to_dict(problem)


def test_fair_round_trip():
    problem = FairProblem([[LogCapacity(1, 2, 1)], [LogCapacity(1, 1, 1)]],
                          3.0, upper_bounds=[[2.5], [None]])
    clone = _round_trip(problem)
    assert isinstance(clone, FairProblem)
    assert clone.mode == "maxmin"
    assert clone.upper_bounds == problem.upper_bounds
    assert instance_to_dict(clone) == instance_to_dict(problem)


def test_float_precision_survives_round_trip():
    value = 0.1 + 0.2  # not representable prettily
    problem = SimplexProblem([LogCapacity(value, 1.0, value)], value)
    clone = _round_trip(problem)
    assert clone.budget == value
    assert clone.objectives[0].w == value


def test_unknown_field_rejected():
    doc = instance_to_dict(SimplexProblem([LogCapacity(1, 1, 1)], 1.0))
    doc["surprise"] = 1
    with pytest.raises(SchemaError) as err:
        instance_from_dict(doc)
    assert "surprise" in str(err.value)


def test_unknown_problem_class_rejected():
    with pytest.raises(SchemaError) as err:
        instance_from_dict({"problem_class": "p9"})
    assert "problem_class" in str(err.value)


def test_bad_objective_field_named_in_diagnostic():
    doc = {"problem_class": "p1", "budget": 1.0,
           "objectives": [{"family": "log_capacity", "w": 1, "a": 1, "b": 1},
                          {"family": "bogus"}]}
    with pytest.raises(SchemaError) as err:
        instance_from_dict(doc)
    assert "objectives[1]" in str(err.value)


def test_p1_class_requires_zero_lower_bounds():
    doc = {"problem_class": "p1", "budget": 1.0, "lower_bounds": [0.5],
           "objectives": [{"family": "log_capacity", "w": 1, "a": 1, "b": 1}]}
    with pytest.raises(SchemaError):
        instance_from_dict(doc)


def test_invariants_rechecked_on_load():
    doc = {"problem_class": "p1_lower", "budget": 1.0,
           "lower_bounds": [0.8, 0.8],
           "objectives": [{"family": "log_capacity", "w": 1, "a": 1, "b": 1},
                          {"family": "log_capacity", "w": 1, "a": 1, "b": 1}]}
    with pytest.raises(SchemaError):
        instance_from_dict(doc)


def test_problem_class_tags(rng):
    assert problem_class(random_simplex("log_capacity", rng, 2)) == "p1"
    assert problem_class(
        random_simplex("log_capacity", rng, 2, with_lower=True)) == "p1_lower"
    assert problem_class(random_box("log_capacity", rng, 2)) == "box"
    assert problem_class(random_ascending("log_capacity", rng, 2)) == "ascending"


def test_file_round_trip(tmp_path, rng):
    problem = random_box("log_capacity", rng, 3)
    path = tmp_path / "instance.json"
    save_instance(problem, str(path))
    clone = load_instance(str(path))
    assert instance_to_dict(clone) == instance_to_dict(problem)


def test_result_document_shape(rng):
    problem = random_box("log_capacity", rng, 3)
    alloc = solve_box(problem)
    doc = result_to_dict(problem, alloc, solver="box:order", strategy="order",
                         cfg=SolverConfig(), wall_time=0.01)
    assert doc["problem_class"] == "box"
    assert doc["powers"] == alloc.powers
    assert doc["status"] == alloc.status
    assert doc["config"]["box_strategy"] == "order"
    json.dumps(doc)  # serializable
