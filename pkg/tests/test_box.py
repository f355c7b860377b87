"""Tests for the four box-constrained strategies."""

import math
import random

import pytest

from waterline import (
    BOX_STRATEGIES, BoxProblem, DomainError, InfeasibleBudget, LogCapacity,
    SolverConfig, enumerate_box, kkt_residual_box, solve_box)

from conftest import CLOSED_FORM_FAMILIES, FLAT_FAMILIES, random_box

K3_EXAMPLE = BoxProblem(
    [LogCapacity(1, 1, 1), LogCapacity(1, 1, 0.5), LogCapacity(1, 1, 0.5)],
    6.0, [1.0, 0.0, 0.0], [1.0, 2.5, 2.5])


@pytest.mark.parametrize("strategy", BOX_STRATEGIES)
def test_k3_example(strategy):
    alloc = solve_box(K3_EXAMPLE, SolverConfig(box_strategy=strategy))
    assert alloc.powers == pytest.approx([1.0, 2.5, 2.5], abs=1e-9)


def test_k3_example_matches_enumeration():
    oracle = enumerate_box(K3_EXAMPLE)
    assert oracle.powers == pytest.approx([1.0, 2.5, 2.5], abs=1e-9)
    assert oracle.certified


@pytest.mark.parametrize("strategy", BOX_STRATEGIES)
def test_degenerate_box_pins_channel(strategy):
    problem = BoxProblem([LogCapacity(1, 1, 1), LogCapacity(1, 1, 1)],
                         3.0, [0.7, 0.0], [0.7, None])
    alloc = solve_box(problem, SolverConfig(box_strategy=strategy))
    assert alloc.powers[0] == pytest.approx(0.7, abs=1e-9)
    assert alloc.powers[1] == pytest.approx(2.3, abs=1e-9)


@pytest.mark.parametrize("strategy", BOX_STRATEGIES)
def test_slack_budget_returns_all_upper(strategy):
    problem = BoxProblem([LogCapacity(1, 1, 1), LogCapacity(1, 1, 1)],
                         10.0, None, [2.0, 3.0])
    alloc = solve_box(problem, SolverConfig(box_strategy=strategy))
    assert alloc.powers == pytest.approx([2.0, 3.0])
    assert alloc.status == "feasible"
    assert alloc.upper_set == [0, 1]


def test_infeasible_lower_bounds():
    with pytest.raises(InfeasibleBudget):
        BoxProblem([LogCapacity(1, 1, 1)], 1.0, [2.0], [3.0])


def test_inverted_bounds_rejected():
    with pytest.raises(DomainError):
        BoxProblem([LogCapacity(1, 1, 1)], 1.0, [2.0], [1.0])


@pytest.mark.parametrize("family", FLAT_FAMILIES)
def test_four_way_agreement_random(family):
    rng = random.Random(hash(family) & 0xFFFF)
    for _ in range(30):
        problem = random_box(family, rng, rng.randint(2, 8))
        allocs = [solve_box(problem, SolverConfig(box_strategy=s))
                  for s in BOX_STRATEGIES]
        ref = allocs[0]
        for alloc in allocs[1:]:
            linf = max(abs(a - b) for a, b in zip(alloc.powers, ref.powers))
            assert linf <= 1e-6
            assert abs(alloc.objective_value - ref.objective_value) <= 1e-8


@pytest.mark.parametrize("family", CLOSED_FORM_FAMILIES)
def test_matches_enumeration_random(family):
    rng = random.Random(hash(family) & 0xFFF)
    for _ in range(25):
        problem = random_box(family, rng, rng.randint(2, 6))
        alloc = solve_box(problem)
        oracle = enumerate_box(problem)
        assert alloc.objective_value == pytest.approx(
            oracle.objective_value, rel=1e-8)


def test_conditions_pass_on_solved_instances(rng):
    for family in FLAT_FAMILIES:
        problem = random_box(family, rng, 5)
        alloc = solve_box(problem)
        report = kkt_residual_box(problem, alloc)
        assert report.passed, (family, report.residuals)


def test_conditions_flag_bound_violation():
    report = kkt_residual_box(K3_EXAMPLE, [0.5, 3.0, 2.5])
    assert report.residuals["bounds_violation"] > 0.4
    assert not report.passed


def test_bounds_always_respected(rng):
    for family in FLAT_FAMILIES:
        for _ in range(10):
            problem = random_box(family, rng, rng.randint(2, 6))
            for strategy in BOX_STRATEGIES:
                alloc = solve_box(problem, SolverConfig(box_strategy=strategy))
                for p, lo, hi in zip(alloc.powers, problem.lower_bounds,
                                     problem.upper_bounds):
                    assert p >= lo - 1e-9
                    assert p <= hi + 1e-9
                total_upper = sum(problem.upper_bounds)
                if math.isinf(total_upper) or total_upper > problem.budget:
                    assert alloc.total_power == pytest.approx(
                        problem.budget, rel=1e-8)
