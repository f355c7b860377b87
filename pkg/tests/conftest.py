"""Shared random-instance factories for the test suite."""

import random

import pytest

from waterline import (
    AfRelay, AscendingProblem, BoxProblem, InverseMse, LogCapacity,
    SimplexProblem, SumInverseMse, SumLog)

FLAT_FAMILIES = ("log_capacity", "inverse_mse", "af_relay",
                 "sum_log", "sum_inverse_mse")
CLOSED_FORM_FAMILIES = ("log_capacity", "inverse_mse", "af_relay")


def make_objective(family: str, rng: random.Random):
    if family == "log_capacity":
        return LogCapacity(rng.uniform(0.5, 2), rng.uniform(0.5, 2),
                           rng.uniform(0.05, 2))
    if family == "inverse_mse":
        return InverseMse(rng.uniform(0.5, 2), rng.uniform(0.5, 2),
                          rng.uniform(0.05, 2))
    if family == "af_relay":
        return AfRelay(rng.uniform(0.5, 2), rng.uniform(0.1, 0.9),
                       rng.uniform(0.5, 2))
    terms = rng.randint(1, 3)
    w = [rng.uniform(0.5, 2) for _ in range(terms)]
    c = [rng.uniform(0.5, 2) for _ in range(terms)]
    d = [rng.uniform(0.5, 2) for _ in range(terms)]
    cls = SumLog if family == "sum_log" else SumInverseMse
    return cls(w, rng.uniform(0.5, 2), rng.uniform(0.5, 2), c, d)


def random_simplex(family: str, rng: random.Random, k: int,
                   with_lower: bool = False) -> SimplexProblem:
    budget = k * rng.uniform(0.5, 3)
    lower = None
    if with_lower:
        lower = [rng.uniform(0, 0.5) * budget / k for _ in range(k)]
    return SimplexProblem([make_objective(family, rng) for _ in range(k)],
                          budget, lower)


def random_box(family: str, rng: random.Random, k: int,
               infinite_tau_prob: float = 0.2) -> BoxProblem:
    budget = k * rng.uniform(0.5, 3)
    lower = [rng.uniform(0, 0.6) * budget / k for _ in range(k)]
    upper = [lo + rng.uniform(0.2, 2.5) * budget / k
             if rng.random() > infinite_tau_prob else None
             for lo in lower]
    return BoxProblem([make_objective(family, rng) for _ in range(k)],
                      budget, lower, upper)


def random_ascending(family: str, rng: random.Random, k: int) -> AscendingProblem:
    base = rng.uniform(0.5, 2.0)
    lower = [rng.uniform(0, 0.3) * base for _ in range(k)]
    upper = [lo + rng.uniform(0.3, 2.0) * base
             if rng.random() > 0.3 else None for lo in lower]
    prefixes, running_gamma, slack = [], 0.0, 0.0
    for j in range(k):
        running_gamma += lower[j]
        slack += rng.uniform(0.1, 1.0) * base
        prefixes.append(running_gamma + slack)
    return AscendingProblem([make_objective(family, rng) for _ in range(k)],
                            prefixes, lower, upper)


@pytest.fixture
def rng():
    return random.Random(20240817)
