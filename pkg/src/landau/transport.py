"""Exact discrete Wasserstein-2 coupling between equal-size uniform ensembles.

For two ensembles of N uniform atoms the optimal transport plan can be taken
to be a permutation (an extreme point of the Birkhoff polytope), so the
squared W2 distance reduces to a minimum-cost assignment under squared
Euclidean cost.  The solver is exact; entropic approximations are out of
scope because the stability inequality being tested is stated for the true
W2.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations
from math import factorial

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .ensemble import Ensemble

__all__ = ["CouplingPlan", "w2_exact", "w2_bruteforce", "plan_cost"]

_BRUTEFORCE_MAX = 8


@dataclass(frozen=True)
class CouplingPlan:
    """Permutation pairing A_i with B_{perm[i]}, plus its mean squared cost."""

    permutation: np.ndarray
    cost: float

    def __post_init__(self):
        perm = np.asarray(self.permutation, dtype=np.int64)
        n = perm.size
        if not np.array_equal(np.sort(perm), np.arange(n)):
            raise ValueError("permutation must be a bijection on 0..n-1")
        perm.setflags(write=False)
        object.__setattr__(self, "permutation", perm)

    @property
    def n(self) -> int:
        return self.permutation.size

    @staticmethod
    def identity(n: int, cost: float = 0.0) -> "CouplingPlan":
        return CouplingPlan(np.arange(n, dtype=np.int64), cost)


def _check_sizes(a: Ensemble, b: Ensemble):
    if a.n != b.n:
        raise ValueError(f"ensemble sizes differ: {a.n} != {b.n}")


def _perm_cost(dist_sq: np.ndarray, perm: np.ndarray) -> float:
    # canonical evaluation order shared by every solver, so equal optimal
    # permutations produce bit-equal costs
    n = dist_sq.shape[0]
    return float(dist_sq[np.arange(n), perm].sum() / n)


def w2_exact(a: Ensemble, b: Ensemble) -> CouplingPlan:
    """Exact squared-W2 optimal assignment between two equal-size ensembles."""
    _check_sizes(a, b)
    dist_sq = cdist(a.velocities, b.velocities, "sqeuclidean")
    rows, cols = linear_sum_assignment(dist_sq)
    perm = np.empty(a.n, dtype=np.int64)
    perm[rows] = cols
    return CouplingPlan(perm, _perm_cost(dist_sq, perm))


def w2_bruteforce(a: Ensemble, b: Ensemble) -> CouplingPlan:
    """Exhaustive assignment oracle; first (lexicographically smallest)
    optimal permutation among all n! candidates.  n <= 8 only."""
    _check_sizes(a, b)
    n = a.n
    if n > _BRUTEFORCE_MAX:
        raise ValueError(f"brute force limited to n <= {_BRUTEFORCE_MAX} ({factorial(n)} perms)")
    dist_sq = cdist(a.velocities, b.velocities, "sqeuclidean")
    best_perm = None
    best_cost = np.inf
    for cand in permutations(range(n)):
        cand = np.asarray(cand, dtype=np.int64)
        cost = _perm_cost(dist_sq, cand)
        if cost < best_cost:
            best_cost = cost
            best_perm = cand
    return CouplingPlan(best_perm, best_cost)


def plan_cost(plan: CouplingPlan, a: Ensemble, b: Ensemble) -> float:
    """Mean squared displacement (1/N) Sum_i |A_i - B_{perm[i]}|^2 under the plan.

    Equals the squared-W2 estimate for the optimal plan and upper-bounds it
    for any other plan.
    """
    _check_sizes(a, b)
    if plan.n != a.n:
        raise ValueError("plan size does not match the ensembles")
    diff = a.velocities - b.velocities[plan.permutation]
    return float(np.mean(np.sum(diff * diff, axis=1)))
