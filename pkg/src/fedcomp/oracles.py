"""Exact enumeration oracles over all column permutations.

Used by the verification suite to check the aggregation and dual
randomization identities against their closed forms, for small n where
iterating all n! permutations is cheap.
"""

from __future__ import annotations

import itertools
from math import factorial

import numpy as np

from .engine import aggregate, center, dual_direction
from .masks import TemplatePattern, mask_from_permutation


def row_support_counts(pattern: TemplatePattern) -> dict[int, dict[frozenset, int]]:
    """For each row, count each size-s client support over all n! permutations.

    The support of row k under permutation perm is the set of clients i
    whose mask column covers coordinate k.
    """
    counts: dict[int, dict[frozenset, int]] = {k: {} for k in range(pattern.d)}
    for perm in itertools.permutations(range(pattern.n)):
        Q = mask_from_permutation(pattern, np.array(perm))
        for k in range(pattern.d):
            support = frozenset(np.flatnonzero(Q[:, k]).tolist())
            counts[k][support] = counts[k].get(support, 0) + 1
    return counts


def expected_support_count(n: int, s: int) -> int:
    """Each size-s subset appears s!(n-s)! times among the n! permutations."""
    return factorial(s) * factorial(n - s)


def aggregate_moments(pattern: TemplatePattern, xhat: np.ndarray) -> tuple[np.ndarray, float]:
    """(E[xbar], E||xbar*1 - mean(xhat)*1||^2) by exact enumeration."""
    n = pattern.n
    mean = xhat.mean(axis=0)
    total = np.zeros(pattern.d)
    var = 0.0
    n_perms = factorial(n)
    for perm in itertools.permutations(range(n)):
        Q = mask_from_permutation(pattern, np.array(perm))
        xbar = aggregate(xhat, Q, pattern.s)
        total += xbar
        var += n * float(np.sum((xbar - mean) ** 2))
    return total / n_perms, var / n_perms


def dual_moments(
    pattern: TemplatePattern, xhat: np.ndarray, p: float, a: float
) -> tuple[np.ndarray, float, float]:
    """Exact moments of the dual direction over coins and permutations.

    Returns (E[d], E sum_i ||d_i||^2, max over permutations of ||sum_i d_i||).
    The coin contributes a factor p (d = 0 on silent rounds).
    """
    n = pattern.n
    n_perms = factorial(n)
    mean_d = np.zeros_like(xhat)
    second = 0.0
    worst_sum = 0.0
    for perm in itertools.permutations(range(n)):
        Q = mask_from_permutation(pattern, np.array(perm))
        d = dual_direction(xhat, Q, pattern.s, a)
        mean_d += d
        second += float(np.sum(d * d))
        worst_sum = max(worst_sum, float(np.linalg.norm(d.sum(axis=0))))
    return p * mean_d / n_perms, p * second / n_perms, worst_sum


def centered_energy(xhat: np.ndarray) -> float:
    """sum_i ||xhat_i - mean||^2, the closed-form normalizer of both identities."""
    return float(np.sum(center(xhat) ** 2))
