"""Solvers for grouped fairness problems.

Three couplings over groups of subchannels sharing one total budget:

* max-min fairness -- maximize the minimum group utility; solved by outer
  bisection on the common utility target t, with an inner per-group
  bisection for the water level that attains t at minimum power.
* clustered allocation -- each group's utilities depend on the group total
  through an interference term; solved by equalizing the marginal value of
  group budget across groups (water level plus the interference partials).
* combined -- max-min over clustered groups; outer bisection on t with an
  inner bisection for the group budget that attains t.

All three rely on monotonicity: group power demand decreases in the water
level and increases in the target utility, so every loop is a bracketed
bisection.
"""

from __future__ import annotations

import math

from .box import solve_box
from .core import solve_p1_lower
from .errors import DomainError, InfeasibleTarget
from .problems import (
    MODE_CLUSTER, MODE_CLUSTER_MAXMIN, MODE_MAXMIN,
    BoxProblem, FairProblem, FairSolution, SimplexProblem, SolverConfig)

_DEFAULT_CFG = SolverConfig()


def _is_cluster(obj) -> bool:
    return getattr(obj, "cluster_aware", False)


def _bind_group(group, cluster_power: float):
    return [obj.bind(cluster_power) if _is_cluster(obj) else obj
            for obj in group]


def _group_eval(group, powers, cluster_power: float | None = None) -> float:
    total = 0.0
    for obj, p in zip(group, powers):
        total += obj.eval(p, cluster_power) if _is_cluster(obj) else obj.eval(p)
    return total


def _group_state(objs, gamma, pinned: dict[int, float], mu: float | None):
    """Powers/utility/total at water level mu (None = rest at lower bounds)."""
    powers = []
    for i, obj in enumerate(objs):
        if i in pinned:
            powers.append(pinned[i])
        elif mu is None:
            powers.append(gamma[i])
        else:
            p = obj.demand(mu)
            powers.append(p if p > gamma[i] else gamma[i])
    utility = sum(obj.eval(p) for obj, p in zip(objs, powers))
    return powers, utility, sum(powers)


def _group_mu_for_t(objs, gamma, pinned: dict[int, float], t: float):
    """Water level (and allocation) reaching group utility t at least power.

    Returns ``(mu, powers, utility, total)``; ``mu`` is None when the group
    already meets t resting at its lower bounds, or has no free channel.
    """
    free = [i for i in range(len(objs)) if i not in pinned]
    if not free:
        return (None, *_group_state(objs, gamma, pinned, None))

    def phi(mu_val: float) -> float:
        return _group_state(objs, gamma, pinned, mu_val)[1]

    if all(math.isfinite(objs[i].rate(gamma[i])) for i in free):
        floor = _group_state(objs, gamma, pinned, None)
        if floor[1] >= t:
            return (None, *floor)

    mu_lo = mu_hi = 1.0
    if phi(1.0) > t:
        for _ in range(600):
            mu_lo = mu_hi
            mu_hi *= 4.0
            if phi(mu_hi) <= t:
                break
        else:
            # utility never drops to t: every free channel is clamped
            return (None, *_group_state(objs, gamma, pinned, None))
    else:
        for _ in range(450):
            mu_hi = mu_lo
            mu_lo *= 0.25
            if phi(mu_lo) >= t:
                break
        else:
            raise InfeasibleTarget(
                f"group utility target {t} unreachable at any power")
    for _ in range(200):
        mu = 0.5 * (mu_lo + mu_hi)
        if phi(mu) >= t:
            mu_lo = mu
        else:
            mu_hi = mu
        if mu_hi - mu_lo <= 1e-15 * mu_hi:
            break
    mu = 0.5 * (mu_lo + mu_hi)
    return (mu, *_group_state(objs, gamma, pinned, mu))


def _maxmin_engine(groups, budget, gammas, pinned, cfg,
                   t_cap: float | None = None):
    """Outer bisection on the common utility target t.

    Returns ``(t, states, iterations, surplus)`` where ``states[j]`` is the
    ``(mu, powers, utility, total)`` tuple of group j and ``surplus`` flags
    that the utility cap was reached with budget left over.
    """
    n_groups = len(groups)
    floors = []
    for j in range(n_groups):
        floors.append(sum(pinned[j].values()) +
                      sum(gammas[j][i] for i in range(len(groups[j]))
                          if i not in pinned[j]))
    total_floor = sum(floors)

    t_his = []
    for j in range(n_groups):
        group = groups[j]
        free = [i for i in range(len(group)) if i not in pinned[j]]
        pin_util = sum(group[i].eval(pinned[j][i]) for i in pinned[j])
        avail = budget - (total_floor - floors[j]) - sum(pinned[j].values())
        free_floor = sum(gammas[j][i] for i in free)
        if not free or avail <= free_floor * (1.0 + 1e-12) or avail <= 0:
            t_his.append(_group_state(group, gammas[j], pinned[j], None)[1])
            continue
        sub = SimplexProblem([group[i] for i in free], avail,
                             [gammas[j][i] for i in free])
        t_his.append(solve_p1_lower(sub, cfg).objective_value + pin_util)
    t_hi = min(t_his)
    if t_cap is not None:
        t_hi = min(t_hi, t_cap)

    def demand(t_val: float):
        states = [list(_group_mu_for_t(groups[j], gammas[j], pinned[j], t_val))
                  for j in range(n_groups)]
        return states, sum(s[3] for s in states)

    states_hi, d_hi = demand(t_hi)
    iterations = 1
    if d_hi <= budget * (1.0 + 1e-12):
        return t_hi, states_hi, iterations, True

    gap = max(1.0, 0.5 * abs(t_hi))
    t_lo = t_hi - gap
    states_lo, d_lo = demand(t_lo)
    for _ in range(200):
        if d_lo <= budget:
            break
        gap *= 2.0
        t_lo -= gap
        states_lo, d_lo = demand(t_lo)
        iterations += 1
    else:
        raise InfeasibleTarget("could not bracket the common utility target")

    best_t, best_states = t_lo, states_lo
    lo, hi = t_lo, t_hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        states, d = demand(mid)
        iterations += 1
        if abs(d - budget) <= cfg.power_tolerance * budget:
            best_t, best_states = mid, states
            break
        if d > budget:
            hi = mid
        else:
            lo = mid
            best_t, best_states = mid, states
        if hi - lo <= 1e-15 * (1.0 + abs(hi)):
            break
    return best_t, best_states, iterations, False


def _distribute_surplus(groups, budget, gammas, taus, states, cfg) -> None:
    """Hand leftover budget to groups with headroom without lowering anyone."""
    remaining = budget - sum(s[3] for s in states)
    for j, group in enumerate(groups):
        if remaining <= cfg.power_tolerance * budget:
            return
        tau_row = taus[j]
        head = math.inf
        if all(math.isfinite(t) for t in tau_row):
            head = sum(tau_row) - states[j][3]
        give = min(remaining, head)
        if give <= cfg.power_tolerance * budget:
            continue
        lower = [min(max(p, gammas[j][i]), tau_row[i])
                 for i, p in enumerate(states[j][1])]
        sub = BoxProblem(group, states[j][3] + give, lower,
                         [None if math.isinf(t) else t for t in tau_row])
        alloc = solve_box(sub, cfg)
        states[j] = [alloc.water_level, alloc.powers, alloc.objective_value,
                     sum(alloc.powers)]
        remaining = budget - sum(s[3] for s in states)


def _build_solution(problem: FairProblem, t, states, pinned, iterations,
                    status: str = "optimal",
                    cluster_totals: list[float] | None = None) -> FairSolution:
    gammas = problem.lower_bounds
    powers, water_levels, totals, utilities, active_sets = [], [], [], [], []
    for j, s in enumerate(states):
        mu, pw, util, total = s
        powers.append(list(pw))
        water_levels.append(mu)
        totals.append(total)
        if cluster_totals is not None:
            util = _group_eval(problem.groups[j], pw, cluster_totals[j])
        utilities.append(util)
        active_sets.append(
            [i for i, p in enumerate(pw)
             if i not in pinned[j] and p > gammas[j][i] + 1e-12 * (1.0 + gammas[j][i])])
    return FairSolution(powers=powers, water_levels=water_levels,
                        group_totals=totals, group_utilities=utilities,
                        t=t, active_sets=active_sets,
                        iterations=iterations, status=status)


def solve_maxmin(problem: FairProblem,
                 cfg: SolverConfig = _DEFAULT_CFG) -> FairSolution:
    """Maximize the minimum group utility under the total budget."""
    if problem.mode != MODE_MAXMIN:
        raise DomainError(f"solve_maxmin requires maxmin mode, got {problem.mode!r}")
    if any(math.isfinite(t) for row in problem.upper_bounds for t in row):
        return solve_maxmin_boxed(problem, cfg)
    pinned = [dict() for _ in problem.groups]
    t, states, iterations, surplus = _maxmin_engine(
        problem.groups, problem.budget, problem.lower_bounds, pinned, cfg)
    if surplus:
        _distribute_surplus(problem.groups, problem.budget,
                            problem.lower_bounds, problem.upper_bounds,
                            states, cfg)
    return _build_solution(problem, t, states, pinned, iterations)


def solve_maxmin_boxed(problem: FairProblem,
                       cfg: SolverConfig = _DEFAULT_CFG) -> FairSolution:
    """Max-min fairness with per-channel box bounds (pin-and-resolve loop)."""
    if problem.mode != MODE_MAXMIN:
        raise DomainError(
            f"solve_maxmin_boxed requires maxmin mode, got {problem.mode!r}")
    groups, budget = problem.groups, problem.budget
    gammas, taus = problem.lower_bounds, problem.upper_bounds

    if all(math.isfinite(t) for row in taus for t in row) and \
            sum(sum(row) for row in taus) <= budget:
        states = []
        for j, group in enumerate(groups):
            pw = list(taus[j])
            states.append([None, pw, _group_eval(group, pw), sum(pw)])
        t = min(s[2] for s in states)
        return _build_solution(problem, t, states,
                               [dict() for _ in groups], 1, status="feasible")

    floors = [sum(row) for row in gammas]
    total_floor = sum(floors)
    t_caps = []
    for j, group in enumerate(groups):
        avail = budget - (total_floor - floors[j])
        if avail <= floors[j] * (1.0 + 1e-12) or avail <= 0:
            t_caps.append(_group_state(group, gammas[j], {}, None)[1])
            continue
        sub = BoxProblem(group, avail, gammas[j],
                         [None if math.isinf(t) else t for t in taus[j]])
        t_caps.append(solve_box(sub, cfg).objective_value)
    t_cap = min(t_caps)

    pinned = [dict() for _ in groups]
    total_k = sum(len(g) for g in groups)
    iterations = 0
    t, states = t_cap, None
    for _ in range(cfg.outer_cap(total_k) + 1):
        t, states, its, _ = _maxmin_engine(groups, budget, gammas, pinned,
                                           cfg, t_cap=t_cap)
        iterations += its
        new_pins = False
        for j in range(len(groups)):
            for i, p in enumerate(states[j][1]):
                if i not in pinned[j] and math.isfinite(taus[j][i]) and \
                        p >= taus[j][i]:
                    pinned[j][i] = taus[j][i]
                    new_pins = True
        if not new_pins:
            break
    _distribute_surplus(groups, budget, gammas, taus, states, cfg)
    return _build_solution(problem, t, states, pinned, iterations)


def solve_cluster(problem: FairProblem,
                  cfg: SolverConfig = _DEFAULT_CFG) -> FairSolution:
    """Split the budget across clusters whose utilities feel the group total."""
    if problem.mode != MODE_CLUSTER:
        raise DomainError(f"solve_cluster requires cluster mode, got {problem.mode!r}")
    groups, budget = problem.groups, problem.budget
    gammas = problem.lower_bounds
    n_groups = len(groups)

    def solve_group(j: int, group_budget: float):
        sub = SimplexProblem(_bind_group(groups[j], group_budget),
                             group_budget, gammas[j])
        return solve_p1_lower(sub, cfg)

    def finish(totals, iterations):
        states = []
        for j, total in enumerate(totals):
            alloc = solve_group(j, total)
            states.append([alloc.water_level, alloc.powers,
                           alloc.objective_value, total])
        t = min(_group_eval(groups[j], states[j][1], totals[j])
                for j in range(n_groups))
        return _build_solution(problem, t, states,
                               [dict() for _ in groups], iterations,
                               cluster_totals=totals)

    if n_groups == 1:
        return finish([budget], 1)
    if not any(_is_cluster(o) and o.sigma_e2 > 0 for g in groups for o in g):
        # No interference coupling: the groups pool into one problem.
        flat_objs, flat_gamma, sizes = [], [], []
        for j, group in enumerate(groups):
            flat_objs.extend(_bind_group(group, 0.0))
            flat_gamma.extend(gammas[j])
            sizes.append(len(group))
        alloc = solve_p1_lower(SimplexProblem(flat_objs, budget, flat_gamma), cfg)
        totals, pos = [], 0
        for size in sizes:
            totals.append(sum(alloc.powers[pos:pos + size]))
            pos += size
        return finish(totals, alloc.iterations)

    b_min = 1e-9 * budget / n_groups

    def marginal(j: int, group_budget: float) -> float:
        """d(group utility)/d(group budget): water level + interference drag."""
        alloc = solve_group(j, group_budget)
        mu = alloc.water_level if alloc.water_level is not None else 0.0
        drag = sum(o.cluster_partial(p, group_budget)
                   for o, p in zip(groups[j], alloc.powers) if _is_cluster(o))
        return mu + drag

    def budget_at(j: int, nu: float) -> float:
        if marginal(j, budget) >= nu:
            return budget
        if marginal(j, b_min) <= nu:
            return b_min
        lo, hi = b_min, budget
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if marginal(j, mid) > nu:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    nu_lo = min(marginal(j, budget) for j in range(n_groups))
    nu_hi = max(marginal(j, b_min) for j in range(n_groups))
    totals = [budget / n_groups] * n_groups
    iterations = 0
    for _ in range(100):
        nu = 0.5 * (nu_lo + nu_hi)
        totals = [budget_at(j, nu) for j in range(n_groups)]
        total = sum(totals)
        iterations += 1
        if abs(total - budget) <= cfg.power_tolerance * budget:
            break
        if total > budget:
            nu_lo = nu
        else:
            nu_hi = nu
        if nu_hi - nu_lo <= 1e-14 * (1.0 + abs(nu_hi)):
            break
    scale = budget / sum(totals)
    return finish([b * scale for b in totals], iterations)


def solve_cluster_maxmin(problem: FairProblem,
                         cfg: SolverConfig = _DEFAULT_CFG) -> FairSolution:
    """Max-min over clustered groups: bisection on t over group budgets."""
    if problem.mode != MODE_CLUSTER_MAXMIN:
        raise DomainError(
            f"solve_cluster_maxmin requires cluster_maxmin mode, got {problem.mode!r}")
    groups, budget = problem.groups, problem.budget
    gammas = problem.lower_bounds
    n_groups = len(groups)
    floors = [sum(row) for row in gammas]
    total_floor = sum(floors)
    b_min = 1e-9 * budget / n_groups

    def solve_group(j: int, group_budget: float):
        sub = SimplexProblem(_bind_group(groups[j], group_budget),
                             group_budget, gammas[j])
        return solve_p1_lower(sub, cfg)

    def utility(j: int, group_budget: float) -> float:
        return _group_eval(groups[j], solve_group(j, group_budget).powers,
                           group_budget)

    def budget_for_t(j: int, t_val: float) -> float:
        lo = floors[j] + b_min
        if utility(j, lo) >= t_val:
            return lo
        if utility(j, budget) <= t_val:
            return budget
        hi = budget
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if utility(j, mid) < t_val:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    t_hi = min(utility(j, budget - (total_floor - floors[j]))
               for j in range(n_groups))
    totals = [budget_for_t(j, t_hi) for j in range(n_groups)]
    iterations = 1
    if sum(totals) <= budget * (1.0 + 1e-12):
        t = t_hi
    else:
        gap = max(1.0, 0.5 * abs(t_hi))
        t_lo = t_hi - gap
        for _ in range(200):
            totals = [budget_for_t(j, t_lo) for j in range(n_groups)]
            iterations += 1
            if sum(totals) <= budget:
                break
            gap *= 2.0
            t_lo -= gap
        else:
            raise InfeasibleTarget("could not bracket the common utility target")
        t = t_lo
        for _ in range(200):
            mid = 0.5 * (t_lo + t_hi)
            trial = [budget_for_t(j, mid) for j in range(n_groups)]
            total = sum(trial)
            iterations += 1
            if abs(total - budget) <= cfg.power_tolerance * budget:
                t, totals = mid, trial
                break
            if total > budget:
                t_hi = mid
            else:
                t_lo = mid
                t, totals = mid, trial
            if t_hi - t_lo <= 1e-15 * (1.0 + abs(t_hi)):
                break

    states = []
    for j, total in enumerate(totals):
        alloc = solve_group(j, total)
        states.append([alloc.water_level, alloc.powers,
                       alloc.objective_value, total])
    return _build_solution(problem, t, states, [dict() for _ in groups],
                           iterations, cluster_totals=totals)


def solve_fair(problem: FairProblem,
               cfg: SolverConfig = _DEFAULT_CFG) -> FairSolution:
    """Dispatch on the fairness mode."""
    if problem.mode == MODE_MAXMIN:
        return solve_maxmin(problem, cfg)
    if problem.mode == MODE_CLUSTER:
        return solve_cluster(problem, cfg)
    return solve_cluster_maxmin(problem, cfg)
