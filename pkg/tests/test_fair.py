"""Tests for max-min, clustered, and combined group solvers."""

import math
import random

import pytest

from waterline import (
    BoxProblem, ClusterLogCapacity, FairProblem, InverseMse, LogCapacity,
    SimplexProblem, check_conditions, grid_search, solve_box, solve_cluster,
    solve_cluster_maxmin, solve_maxmin, solve_maxmin_boxed, solve_p1)


def test_maxmin_symmetric_split():
    problem = FairProblem([[LogCapacity(1, 1, 1)], [LogCapacity(1, 1, 1)]], 2.0)
    sol = solve_maxmin(problem)
    assert sol.powers[0][0] == pytest.approx(1.0, rel=1e-8)
    assert sol.powers[1][0] == pytest.approx(1.0, rel=1e-8)
    assert sol.t == pytest.approx(math.log(2.0), rel=1e-8)


def test_maxmin_closed_form_instance():
    # f1 = log(1+2p), f2 = log(1+p), P = 3: optimum p = (1, 2), t = log 3
    problem = FairProblem([[LogCapacity(1, 2, 1)], [LogCapacity(1, 1, 1)]], 3.0)
    sol = solve_maxmin(problem)
    assert sol.t == pytest.approx(math.log(3.0), abs=1e-8)
    assert sol.powers[0][0] == pytest.approx(1.0, abs=1e-7)
    assert sol.powers[1][0] == pytest.approx(2.0, abs=1e-7)
    oracle = grid_search(problem)
    assert sol.t == pytest.approx(oracle.objective_value, abs=1e-5)


def test_maxmin_inverse_mse_groups():
    rng = random.Random(11)
    groups = [[InverseMse(rng.uniform(0.5, 2), rng.uniform(0.5, 2), 1.0)
               for _ in range(2)] for _ in range(2)]
    problem = FairProblem(groups, 4.0)
    sol = solve_maxmin(problem)
    assert abs(sol.group_utilities[0] - sol.group_utilities[1]) <= 1e-8
    assert sum(sol.group_totals) == pytest.approx(4.0, rel=1e-9)
    oracle = grid_search(problem)
    assert sol.t == pytest.approx(oracle.objective_value, abs=1e-5)
    report = check_conditions(problem, sol, tolerance=1e-6)
    assert report.passed, report.residuals


def test_maxmin_monotone_group_demand():
    # the inner map t -> demanded power is increasing (bisection validity)
    from waterline.fair import _group_mu_for_t
    group = [LogCapacity(1, 2, 1), LogCapacity(1, 1, 1)]
    demands = [_group_mu_for_t(group, [0.0, 0.0], {}, t)[3]
               for t in (0.2, 0.5, 1.0, 1.5)]
    assert all(a < b for a, b in zip(demands, demands[1:]))
    # and power demand decreases in the water level
    mus = (0.2, 0.5, 1.0, 2.0)
    powers = [sum(max(o.demand(mu), 0.0) for o in group) for mu in mus]
    assert all(a > b for a, b in zip(powers, powers[1:]))


def test_cluster_single_group_reduces_to_p1():
    group = [ClusterLogCapacity(1, 2, 0.1, 1.0), ClusterLogCapacity(1, 1, 0.1, 1.0)]
    problem = FairProblem([group], 4.0, mode="cluster")
    sol = solve_cluster(problem)
    ref = solve_p1(SimplexProblem([o.bind(4.0) for o in group], 4.0))
    assert sol.powers[0] == pytest.approx(ref.powers, rel=1e-8)
    assert sol.group_totals[0] == pytest.approx(4.0)


def test_cluster_no_csi_error_pools():
    groups = [[ClusterLogCapacity(1, 2, 0.0, 1.0)],
              [ClusterLogCapacity(1, 1, 0.0, 1.0)]]
    problem = FairProblem(groups, 3.0, mode="cluster")
    sol = solve_cluster(problem)
    pooled = solve_p1(SimplexProblem(
        [LogCapacity(1, 2, 1), LogCapacity(1, 1, 1)], 3.0))
    assert sol.powers[0][0] == pytest.approx(pooled.powers[0], rel=1e-8)
    assert sol.powers[1][0] == pytest.approx(pooled.powers[1], rel=1e-8)


def test_cluster_matches_grid_oracle():
    groups = [[ClusterLogCapacity(1, 2.0, 0.1, 1.0),
               ClusterLogCapacity(1, 0.8, 0.1, 1.0)],
              [ClusterLogCapacity(1, 1.5, 0.1, 1.0)]]
    problem = FairProblem(groups, 5.0, mode="cluster")
    sol = solve_cluster(problem)
    oracle = grid_search(problem)
    assert sum(sol.group_utilities) == pytest.approx(
        oracle.objective_value, abs=1e-6)
    assert sum(sol.group_totals) == pytest.approx(5.0, rel=1e-9)


def test_cluster_maxmin_symmetric():
    groups = [[ClusterLogCapacity(1, 1, 0.1, 1.0)],
              [ClusterLogCapacity(1, 1, 0.1, 1.0)]]
    problem = FairProblem(groups, 4.0, mode="cluster_maxmin")
    sol = solve_cluster_maxmin(problem)
    assert sol.group_totals[0] == pytest.approx(2.0, rel=1e-6)
    assert sol.group_totals[1] == pytest.approx(2.0, rel=1e-6)
    assert sol.group_utilities[0] == pytest.approx(sol.group_utilities[1],
                                                   rel=1e-8)


def test_cluster_maxmin_asymmetric_matches_grid():
    groups = [[ClusterLogCapacity(1, 2.0, 0.1, 1.0)],
              [ClusterLogCapacity(1, 0.7, 0.1, 1.0),
               ClusterLogCapacity(1, 1.2, 0.1, 1.0)]]
    problem = FairProblem(groups, 5.0, mode="cluster_maxmin")
    sol = solve_cluster_maxmin(problem)
    assert abs(sol.group_utilities[0] - sol.group_utilities[1]) <= 1e-6
    assert sum(sol.group_totals) == pytest.approx(5.0, rel=1e-8)
    oracle = grid_search(problem)
    assert sol.t == pytest.approx(oracle.objective_value, abs=1e-5)


def test_cluster_maxmin_no_csi_error_matches_maxmin():
    groups_c = [[ClusterLogCapacity(1, 2.0, 0.0, 1.0)],
                [ClusterLogCapacity(1, 1.0, 0.0, 1.0)]]
    sol_c = solve_cluster_maxmin(FairProblem(groups_c, 3.0, mode="cluster_maxmin"))
    groups_m = [[LogCapacity(1, 2, 1)], [LogCapacity(1, 1, 1)]]
    sol_m = solve_maxmin(FairProblem(groups_m, 3.0))
    assert sol_c.t == pytest.approx(sol_m.t, abs=1e-7)


def test_boxed_slack_boxes_match_unboxed():
    groups = [[LogCapacity(1, 2, 1)], [LogCapacity(1, 1, 1)]]
    plain = solve_maxmin(FairProblem(groups, 3.0))
    boxed = solve_maxmin_boxed(FairProblem(
        groups, 3.0, upper_bounds=[[100.0], [100.0]]))
    assert boxed.t == pytest.approx(plain.t, abs=1e-8)
    assert boxed.powers[0][0] == pytest.approx(plain.powers[0][0], abs=1e-6)


def test_boxed_single_group_matches_solve_box():
    objs = [LogCapacity(1, 1, 1), LogCapacity(1, 1, 0.5)]
    box = solve_box(BoxProblem(objs, 3.0, [0.2, 0.2], [2.0, 2.0]))
    sol = solve_maxmin_boxed(FairProblem(
        [objs], 3.0, lower_bounds=[[0.2, 0.2]], upper_bounds=[[2.0, 2.0]]))
    assert sol.powers[0] == pytest.approx(box.powers, abs=1e-8)


def test_boxed_tight_upper_bounds_respected():
    rng = random.Random(13)
    groups = [[InverseMse(rng.uniform(0.5, 2), rng.uniform(0.5, 2), 1.0)
               for _ in range(2)] for _ in range(2)]
    taus = [[0.6, 0.6], [5.0, 5.0]]
    problem = FairProblem(groups, 4.0, upper_bounds=taus)
    sol = solve_maxmin_boxed(problem)
    for row, tau_row in zip(sol.powers, taus):
        for p, tau in zip(row, tau_row):
            assert p <= tau + 1e-9
    assert sum(sol.group_totals) == pytest.approx(4.0, rel=1e-8)
    # groups not fully pinned still reach at least t
    for util, active in zip(sol.group_utilities, sol.active_sets):
        assert util >= sol.t - 1e-6 * (1 + abs(sol.t))


def test_boxed_all_upper_bounds_cover_budget():
    groups = [[LogCapacity(1, 1, 1)], [LogCapacity(1, 1, 1)]]
    problem = FairProblem(groups, 5.0, upper_bounds=[[1.0], [1.0]])
    sol = solve_maxmin_boxed(problem)
    assert sol.powers == [[1.0], [1.0]]
    assert sol.status == "feasible"


def test_conditions_flag_unequal_group_utilities():
    problem = FairProblem([[LogCapacity(1, 2, 1)], [LogCapacity(1, 1, 1)]], 3.0)
    sol = solve_maxmin(problem)
    # overwrite with the uniform split: utilities become unequal
    from waterline import FairSolution
    uniform = FairSolution(
        powers=[[1.5], [1.5]], water_levels=[None, None],
        group_totals=[1.5, 1.5],
        group_utilities=[math.log(4.0), math.log(2.5)],
        t=math.log(4.0), active_sets=[[0], [0]], iterations=1,
        status="feasible")
    report = check_conditions(problem, uniform, tolerance=1e-6)
    assert not report.passed
    assert report.residuals["utility_spread"] > 0.1
