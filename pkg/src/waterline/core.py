"""Water-level root finding and the simplex solvers (Algorithms for P1/P1.1).

The deactivation loop initializes every subchannel as active, solves the
common-rate equation on the active set, and removes (pins at its lower bound)
every channel whose unconstrained demand falls at or below that bound.  The
loop shrinks the active set strictly each round, so it runs at most K-1 times
and the water level increases strictly across rounds.
"""

from __future__ import annotations

import math
from typing import Sequence

from .errors import BracketFailure, DomainError, InfeasibleBudget
from .objectives import Objective
from .problems import Allocation, KktReport, SimplexProblem, SolverConfig

_DEFAULT_CFG = SolverConfig()


def _closed_form_mu(objectives: Sequence[Objective], budget: float) -> float | None:
    """Closed-form water level for homogeneous closed-form families."""
    families = {obj.family for obj in objectives}
    if families == {"log_capacity"}:
        denom = budget + sum(obj.b / obj.a for obj in objectives)
        if denom <= 0:
            raise BracketFailure("budget below the reachable demand range")
        return sum(obj.w for obj in objectives) / denom
    if families == {"inverse_mse"}:
        denom = budget + sum(obj.b / obj.a for obj in objectives)
        if denom <= 0:
            raise BracketFailure("budget below the reachable demand range")
        root = sum(math.sqrt(obj.w / obj.a) for obj in objectives) / denom
        return root * root
    return None


def _water_level_and_powers(objectives: Sequence[Objective], budget: float,
                            cfg: SolverConfig = _DEFAULT_CFG,
                            scale: float | None = None):
    """Solve sum_k g_k(mu) = budget on the given channels.

    Returns ``(mu, powers)`` with signed powers (negative entries mean the
    channel demands less than its domain edge at this water level).
    """
    if not objectives:
        raise BracketFailure("water level undefined on an empty active set")
    scale = abs(budget) if scale is None else scale
    # Drive the residual well below the configured tolerance so that
    # independently configured strategies agree to much better than it.
    tol = 1e-4 * cfg.power_tolerance * max(scale, 1e-30)

    mu = _closed_form_mu(objectives, budget)
    if mu is not None:
        return mu, [obj.demand(mu) for obj in objectives]

    hints: list[float | None] = [None] * len(objectives)

    def h(mu_val: float) -> float:
        total = 0.0
        for i, obj in enumerate(objectives):
            p = obj.demand(mu_val, hint=hints[i])
            hints[i] = p if p > obj.domain_min() else None
            total += p
        return total - budget

    # Bracket the strictly decreasing residual by doubling/halving.
    mu_lo = mu_hi = 1.0
    h_lo = h(mu_lo)
    if h_lo < 0:
        for _ in range(1100):
            mu_lo *= 0.5
            h_lo = h(mu_lo)
            if h_lo >= 0:
                break
        else:
            raise BracketFailure("could not bracket the water level from below")
        mu_hi = 2.0 * mu_lo
        h_hi = h(mu_hi)
    else:
        h_hi = h_lo
        mu_hi = mu_lo
    growth = 0
    while h_hi > 0:
        mu_hi *= 2.0
        h_hi = h(mu_hi)
        growth += 1
        if growth > 64:
            raise BracketFailure("could not bracket the water level from above")
    if mu_lo == mu_hi:
        return mu_lo, [obj.demand(mu_lo, hint=hints[i]) for i, obj in enumerate(objectives)]

    # Illinois-damped regula falsi on the bracket.
    side = 0
    mu_mid = 0.5 * (mu_lo + mu_hi)
    for _ in range(200):
        denom = h_hi - h_lo
        if denom == 0:
            mu_mid = 0.5 * (mu_lo + mu_hi)
        else:
            mu_mid = mu_hi - h_hi * (mu_hi - mu_lo) / denom
            if not (mu_lo < mu_mid < mu_hi):
                mu_mid = 0.5 * (mu_lo + mu_hi)
        h_mid = h(mu_mid)
        if abs(h_mid) <= tol:
            break
        if h_mid > 0:
            mu_lo, h_lo = mu_mid, h_mid
            if side == 1:
                h_hi *= 0.5
            side = 1
        else:
            mu_hi, h_hi = mu_mid, h_mid
            if side == -1:
                h_lo *= 0.5
            side = -1
        if mu_hi - mu_lo <= cfg.mu_tolerance * 1e-4 * mu_hi:
            break
    mu = mu_mid
    return mu, [obj.demand(mu, hint=hints[i]) for i, obj in enumerate(objectives)]


def solve_water_level(objectives: Sequence[Objective], budget: float,
                      fixed_consumption: float = 0.0,
                      cfg: SolverConfig = _DEFAULT_CFG,
                      scale: float | None = None) -> float:
    """Water level mu with sum_k g_k(mu) = budget - fixed_consumption."""
    remaining = budget - fixed_consumption
    if remaining <= 0:
        raise BracketFailure("no budget left for the active channels")
    mu, _ = _water_level_and_powers(objectives, remaining, cfg,
                                    scale=scale if scale is not None else budget)
    return mu


def solve_p1_lower(problem: SimplexProblem,
                   cfg: SolverConfig = _DEFAULT_CFG) -> Allocation:
    """Deactivation-loop solver under arbitrary lower bounds (P1.1)."""
    objs = list(problem.objectives)
    gamma = list(problem.lower_bounds)
    k = len(objs)
    budget = problem.budget
    if sum(gamma) > budget * (1.0 + 1e-12):
        raise InfeasibleBudget("sum of lower bounds exceeds budget")

    active = [True] * k
    powers = list(gamma)
    water_levels: list[float] = []
    mu: float | None = None
    status = "optimal"
    rounds = 0
    cap = cfg.outer_cap(k)

    while True:
        act_idx = [i for i in range(k) if active[i]]
        remaining = budget - sum(gamma[i] for i in range(k) if not active[i])
        if not act_idx or remaining <= cfg.power_tolerance * budget:
            for i in act_idx:
                active[i] = False
                powers[i] = gamma[i]
            mu = None
            status = "feasible"
            break
        mu, act_powers = _water_level_and_powers(
            [objs[i] for i in act_idx], remaining, cfg, scale=budget)
        for i, p in zip(act_idx, act_powers):
            powers[i] = p
        violated = [i for i, p in zip(act_idx, act_powers) if p <= gamma[i]]
        if not violated:
            water_levels.append(mu)
            break
        water_levels.append(mu)
        for i in violated:
            active[i] = False
            powers[i] = gamma[i]
        rounds += 1
        if rounds > cap:  # unreachable: the active set shrinks every round
            status = "iteration_cap"
            for i in act_idx:
                if active[i]:
                    powers[i] = gamma[i]
                    active[i] = False
            mu = None
            break

    active_set = [i for i in range(k) if active[i]]
    lower_set = [i for i in range(k) if not active[i]]
    objective_value = sum(obj.eval(p) for obj, p in zip(objs, powers))
    return Allocation(
        powers=powers,
        water_level=mu if active_set else None,
        active_set=active_set,
        lower_set=lower_set,
        upper_set=[],
        iterations=len(water_levels) if water_levels else 1,
        objective_value=objective_value,
        status=status,
        water_levels=water_levels,
    )


def solve_p1(problem: SimplexProblem,
             cfg: SolverConfig = _DEFAULT_CFG) -> Allocation:
    """Deactivation-loop solver for the zero-lower-bound problem (P1)."""
    if any(g != 0.0 for g in problem.lower_bounds):
        raise DomainError("solve_p1 requires all-zero lower bounds; "
                          "use solve_p1_lower")
    return solve_p1_lower(problem, cfg)


def kkt_residual_p1(problem: SimplexProblem,
                    allocation: Allocation | Sequence[float],
                    tolerance: float = 1e-8) -> KktReport:
    """Residuals of the three equal-rate optimality conditions for P1/P1.1."""
    powers = list(allocation.powers) if isinstance(allocation, Allocation) \
        else [float(p) for p in allocation]
    objs = list(problem.objectives)
    gamma = list(problem.lower_bounds)
    eps = [1e-12 * (1.0 + g) for g in gamma]
    active = [i for i, p in enumerate(powers) if p > gamma[i] + eps[i]]
    inactive = [i for i in range(len(powers)) if i not in active]

    residuals: dict[str, float] = {}
    rates = [objs[i].rate(powers[i]) for i in active]
    residuals["rate_spread"] = (max(rates) - min(rates)) if len(rates) > 1 else 0.0
    if rates:
        mu = min(rates)
        worst = 0.0
        for j in inactive:
            worst = max(worst, objs[j].rate(gamma[j]) - mu)
        residuals["bound_rate_violation"] = worst
    else:
        residuals["bound_rate_violation"] = 0.0
    residuals["power_residual"] = abs(sum(powers) - problem.budget) / problem.budget
    return KktReport(residuals=residuals, tolerance=tolerance)
