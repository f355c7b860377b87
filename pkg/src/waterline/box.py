"""Four interchangeable solvers for the box-constrained allocation problem.

Strategies (selected through ``SolverConfig.box_strategy``):

* ``set_a``  -- repeated lower-bound solves; channels that hit their upper
  bound are clamped there and removed with the budget shrunk accordingly.
* ``set_b``  -- the balanced dual-index variant that pins lower and upper
  violations alternately; guarded against oscillation by an iteration cap
  with a fall back to ``set_a``.
* ``bisect`` -- outer bisection on the water level with clamped demands.
* ``order``  -- sorts channels by the rate at their upper bound and sweeps
  the candidate upper-bound sets in that order (the default).

All four return identical allocations up to numeric tolerance; the
cross-strategy agreement is part of the acceptance suite.
"""

from __future__ import annotations

import math

from .core import _water_level_and_powers, solve_p1_lower
from .errors import InfeasibleBudget
from .objectives import Objective
from .problems import Allocation, BoxProblem, KktReport, SimplexProblem, SolverConfig

_DEFAULT_CFG = SolverConfig()

_STRATEGY_NAMES = ("set_a", "set_b", "bisect", "order")


def _slack_budget_allocation(problem: BoxProblem) -> Allocation | None:
    """All-upper allocation when the budget exceeds the sum of upper bounds."""
    if any(math.isinf(t) for t in problem.upper_bounds):
        return None
    total_upper = sum(problem.upper_bounds)
    if total_upper > problem.budget:
        return None
    powers = list(problem.upper_bounds)
    objective = sum(o.eval(p) for o, p in zip(problem.objectives, powers))
    return Allocation(
        powers=powers, water_level=None, active_set=[],
        lower_set=[], upper_set=list(range(problem.n)),
        iterations=1, objective_value=objective, status="feasible")


def _check_feasible(problem: BoxProblem) -> None:
    if sum(problem.lower_bounds) > problem.budget * (1.0 + 1e-12):
        raise InfeasibleBudget("sum of lower bounds exceeds budget")


def _finish(problem: BoxProblem, powers, mu, iterations, status="optimal",
            water_levels=None) -> Allocation:
    gamma, tau = problem.lower_bounds, problem.upper_bounds
    lower_set, upper_set, active_set = [], [], []
    for i, p in enumerate(powers):
        if p <= gamma[i] + 1e-12 * (1.0 + gamma[i]):
            lower_set.append(i)
        elif math.isfinite(tau[i]) and p >= tau[i] - 1e-12 * (1.0 + tau[i]):
            upper_set.append(i)
        else:
            active_set.append(i)
    objective = sum(o.eval(p) for o, p in zip(problem.objectives, powers))
    return Allocation(
        powers=list(powers), water_level=mu if active_set else None,
        active_set=active_set, lower_set=lower_set, upper_set=upper_set,
        iterations=iterations, objective_value=objective, status=status,
        water_levels=water_levels or [])


def solve_box_set_a(problem: BoxProblem,
                    cfg: SolverConfig = _DEFAULT_CFG) -> Allocation:
    """Algorithm built on the lower-bound solver with upper-bound clamping."""
    _check_feasible(problem)
    slack = _slack_budget_allocation(problem)
    if slack is not None:
        return slack
    k = problem.n
    gamma, tau = problem.lower_bounds, problem.upper_bounds
    remaining = list(range(k))
    powers = [0.0] * k
    budget = problem.budget
    mu = None
    calls = 0
    while remaining:
        sub = SimplexProblem(
            objectives=[problem.objectives[i] for i in remaining],
            budget=budget,
            lower_bounds=[gamma[i] for i in remaining])
        sub_alloc = solve_p1_lower(sub, cfg)
        calls += 1
        for i, p in zip(remaining, sub_alloc.powers):
            powers[i] = p
        mu = sub_alloc.water_level
        pinned = [i for i, p in zip(remaining, sub_alloc.powers)
                  if math.isfinite(tau[i]) and p >= tau[i]]
        if not pinned:
            break
        for i in pinned:
            powers[i] = tau[i]
            budget -= tau[i]
        remaining = [i for i in remaining if i not in pinned]
    return _finish(problem, powers, mu, calls)


def solve_box_set_b(problem: BoxProblem,
                    cfg: SolverConfig = _DEFAULT_CFG) -> Allocation:
    """Balanced dual-index solver; falls back to set_a on oscillation."""
    _check_feasible(problem)
    slack = _slack_budget_allocation(problem)
    if slack is not None:
        return slack
    k = problem.n
    objs = list(problem.objectives)
    gamma, tau = problem.lower_bounds, problem.upper_bounds
    idx_low = [True] * k   # True while the lower bound is not pinned
    idx_up = [True] * k    # True while the upper bound is not pinned
    powers = [0.0] * k
    mu: float | None = None
    tol = 1e-12

    def recompute():
        nonlocal mu
        active = [i for i in range(k) if idx_low[i] and idx_up[i]]
        fixed = sum(gamma[i] for i in range(k) if not idx_low[i]) + \
            sum(tau[i] for i in range(k) if not idx_up[i])
        remaining = problem.budget - fixed
        if not active:
            return
        if remaining <= cfg.power_tolerance * problem.budget:
            for i in active:
                powers[i] = gamma[i]
                idx_low[i] = False
            return
        mu_val, act_powers = _water_level_and_powers(
            [objs[i] for i in active], remaining, cfg, scale=problem.budget)
        mu = mu_val
        for i, p in zip(active, act_powers):
            powers[i] = p

    for i in range(k):
        powers[i] = gamma[i]
    recompute()
    rounds = 0
    cap = cfg.outer_cap(k)
    while True:
        lower_viol = [i for i in range(k)
                      if idx_low[i] and idx_up[i] and powers[i] <= gamma[i] + tol * (1 + gamma[i])]
        upper_viol = [i for i in range(k)
                      if idx_up[i] and math.isfinite(tau[i]) and powers[i] >= tau[i]]
        if not lower_viol and not upper_viol:
            break
        rounds += 1
        if rounds > cap:
            # Oscillation guard: the reset in the upper branch is not proven
            # cycle-free, so hand the instance to the sequential strategy.
            return solve_box_set_a(problem, cfg)
        if lower_viol:
            for i in lower_viol:
                idx_low[i] = False
                powers[i] = gamma[i]
            recompute()
            continue
        for i in upper_viol:
            idx_up[i] = False
            powers[i] = tau[i]
        for i in range(k):
            if idx_up[i]:
                idx_low[i] = True
        recompute()
    return _finish(problem, powers, mu, max(rounds, 1))


def solve_box_bisect(problem: BoxProblem,
                     cfg: SolverConfig = _DEFAULT_CFG) -> Allocation:
    """Outer bisection on the water level with per-channel clamping."""
    _check_feasible(problem)
    slack = _slack_budget_allocation(problem)
    if slack is not None:
        return slack
    k = problem.n
    objs = list(problem.objectives)
    gamma, tau = problem.lower_bounds, problem.upper_bounds
    budget = problem.budget
    sigma = 1e-4 * cfg.power_tolerance * budget

    def clamped_total(mu_val: float):
        powers = []
        for i, obj in enumerate(objs):
            p = obj.demand(mu_val)
            p = min(max(p, gamma[i]), tau[i])
            powers.append(p)
        return powers, sum(powers)

    def rate_at(obj: Objective, p: float) -> float:
        edge = obj.domain_min()
        r = obj.rate(max(p, edge))
        if math.isinf(r):
            r = obj.rate(max(p, edge) + 1e-12)
        return r

    mu_max = max(rate_at(obj, gamma[i]) for i, obj in enumerate(objs))
    finite_tau_rates = [rate_at(obj, tau[i]) for i, obj in enumerate(objs)
                        if math.isfinite(tau[i])]
    if finite_tau_rates:
        mu_min = min(finite_tau_rates)
    else:
        mu_min = min(rate_at(obj, budget) for obj in objs)
    # Force a valid bracket in case the initial guesses do not straddle P.
    for _ in range(200):
        if clamped_total(mu_min)[1] >= budget:
            break
        mu_min *= 0.5
    for _ in range(200):
        if clamped_total(mu_max)[1] <= budget:
            break
        mu_max *= 2.0

    best_powers, best_total = clamped_total(0.5 * (mu_min + mu_max))
    best_mu = 0.5 * (mu_min + mu_max)
    status = "optimal"
    iterations = 0
    while abs(best_total - budget) > sigma:
        iterations += 1
        if best_total > budget:
            mu_min = best_mu
        else:
            mu_max = best_mu
        if (mu_max - mu_min) <= 1e-16 * max(mu_max, 1e-300):
            status = "feasible"  # tolerance floor: return the best iterate
            break
        mu = 0.5 * (mu_min + mu_max)
        powers, total = clamped_total(mu)
        if abs(total - budget) <= abs(best_total - budget):
            best_powers, best_total, best_mu = powers, total, mu
        else:
            best_powers, best_total, best_mu = powers, total, mu
    return _finish(problem, best_powers, best_mu, max(iterations, 1), status=status)


def solve_box_ordered(problem: BoxProblem,
                      cfg: SolverConfig = _DEFAULT_CFG) -> Allocation:
    """Order-based sweep over candidate upper-bound sets."""
    _check_feasible(problem)
    slack = _slack_budget_allocation(problem)
    if slack is not None:
        return slack
    k = problem.n
    objs = list(problem.objectives)
    gamma, tau = problem.lower_bounds, problem.upper_bounds

    def tau_rate(i: int) -> float:
        if math.isinf(tau[i]):
            return 0.0
        return objs[i].rate(tau[i])

    order = sorted(range(k), key=lambda i: -tau_rate(i))

    def clamped_demand_total(mu_val: float) -> float:
        total = 0.0
        for i, obj in enumerate(objs):
            total += min(max(obj.demand(mu_val), gamma[i]), tau[i])
        return total

    exit_case = None
    for case in range(k):
        mu_case = tau_rate(order[case])
        if mu_case <= 0 or clamped_demand_total(mu_case) >= problem.budget:
            exit_case = case
            break
    if exit_case is None:
        # Every candidate water level under-uses the budget: only possible
        # when the budget exceeds the sum of (finite) upper bounds, which the
        # slack-budget branch already covered.
        raise InfeasibleBudget("order sweep found no feasible case")

    fixed = [order[c] for c in range(exit_case)]
    rest = [order[c] for c in range(exit_case, k)]
    powers = [0.0] * k
    for i in fixed:
        powers[i] = tau[i]
    budget = problem.budget - sum(tau[i] for i in fixed)
    sub = SimplexProblem(
        objectives=[objs[i] for i in rest],
        budget=budget,
        lower_bounds=[gamma[i] for i in rest])
    sub_alloc = solve_p1_lower(sub, cfg)
    for i, p in zip(rest, sub_alloc.powers):
        powers[i] = p
    return _finish(problem, powers, sub_alloc.water_level,
                   exit_case + sub_alloc.iterations,
                   water_levels=sub_alloc.water_levels)


_STRATEGIES = {
    "set_a": solve_box_set_a,
    "set_b": solve_box_set_b,
    "bisect": solve_box_bisect,
    "order": solve_box_ordered,
}


def solve_box(problem: BoxProblem,
              cfg: SolverConfig = _DEFAULT_CFG) -> Allocation:
    """Dispatch to the configured box strategy."""
    return _STRATEGIES[cfg.box_strategy](problem, cfg)


def kkt_residual_box(problem: BoxProblem,
                     allocation: Allocation | list[float],
                     tolerance: float = 1e-8) -> KktReport:
    """Residuals of the four box optimality conditions."""
    powers = list(allocation.powers) if isinstance(allocation, Allocation) \
        else [float(p) for p in allocation]
    objs = list(problem.objectives)
    gamma, tau = problem.lower_bounds, problem.upper_bounds
    lower, upper, active = [], [], []
    for i, p in enumerate(powers):
        if p <= gamma[i] + 1e-12 * (1.0 + gamma[i]):
            lower.append(i)
        elif math.isfinite(tau[i]) and p >= tau[i] - 1e-12 * (1.0 + tau[i]):
            upper.append(i)
        else:
            active.append(i)

    residuals: dict[str, float] = {}
    not_applicable: list[str] = []
    rates = [objs[i].rate(powers[i]) for i in active]
    residuals["rate_spread"] = (max(rates) - min(rates)) if len(rates) > 1 else 0.0
    if rates:
        mu_lo, mu_hi = min(rates), max(rates)
        residuals["lower_rate_violation"] = max(
            [objs[j].rate(gamma[j]) - mu_lo for j in lower], default=0.0)
        residuals["upper_rate_violation"] = max(
            [mu_hi - objs[j].rate(tau[j]) for j in upper], default=0.0)
        residuals["lower_rate_violation"] = max(0.0, residuals["lower_rate_violation"])
        residuals["upper_rate_violation"] = max(0.0, residuals["upper_rate_violation"])
    else:
        residuals["lower_rate_violation"] = 0.0
        residuals["upper_rate_violation"] = 0.0
    finite_tau = all(math.isfinite(t) for t in tau)
    if finite_tau and sum(tau) <= problem.budget:
        not_applicable.append("power_residual")
        residuals["power_residual"] = 0.0
    else:
        residuals["power_residual"] = abs(sum(powers) - problem.budget) / problem.budget
    bounds_violation = 0.0
    for i, p in enumerate(powers):
        bounds_violation = max(bounds_violation, gamma[i] - p, p - tau[i])
    residuals["bounds_violation"] = max(0.0, bounds_violation)
    return KktReport(residuals=residuals, tolerance=tolerance,
                     not_applicable=not_applicable)
