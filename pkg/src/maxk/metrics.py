"""Unbiased pass@k and max@k estimators from a finite sample of n generations."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from maxk.combinatorics import binom_ratio
from maxk.errors import InvalidCountError, InvalidKError


def as_reward_group(rewards: Sequence[float] | np.ndarray) -> np.ndarray:
    """Validate a reward group and return it as a float64 vector."""
    r = np.asarray(rewards, dtype=np.float64)
    if r.ndim != 1 or r.size < 1:
        raise InvalidCountError("a reward group needs at least one reward")
    if not np.all(np.isfinite(r)) or r.min() < 0.0 or r.max() > 1.0:
        raise ValueError("rewards must lie in [0, 1]")
    return r


def check_k(n: int, k: int) -> None:
    if k < 1 or k > n:
        raise InvalidKError(f"k must satisfy 1 <= k <= n, got k={k}, n={n}")


def max_weights(n: int, k: int) -> np.ndarray:
    """Coefficients C(i-1, k-1) / C(n, k) for ascending ranks i = 1..n."""
    check_k(n, k)
    return np.array([binom_ratio(i - 1, k - 1, n, k) for i in range(1, n + 1)])


def pass_at_k(n: int, c: int, k: int) -> float:
    """Unbiased pass@k: 1 - C(n - c, k) / C(n, k).

    Args:
        n: total number of generations.
        c: number of correct generations.
        k: subset size.

    >>> round(pass_at_k(4, 2, 2), 6)
    0.833333
    """
    if c < 0 or c > n:
        raise InvalidCountError(f"c must satisfy 0 <= c <= n, got c={c}, n={n}")
    check_k(n, k)
    return 1.0 - binom_ratio(n - c, k, n, k)


def max_at_k(rewards: Sequence[float] | np.ndarray, k: int) -> float:
    """Expected maximum over a uniformly random k-subset of the rewards.

    With the rewards sorted ascending as r_(1) <= ... <= r_(n), the subset
    maximum equals r_(i) in exactly C(i-1, k-1) of the C(n, k) subsets.
    """
    r = as_reward_group(rewards)
    w = max_weights(r.size, k)
    return float(w @ np.sort(r, kind="stable"))


def pass_at_k_from_rewards(
    rewards: Sequence[float] | np.ndarray, threshold: float, k: int
) -> float:
    """pass@k after binarizing: a generation counts as correct iff reward >= threshold."""
    r = as_reward_group(rewards)
    return pass_at_k(r.size, int(np.count_nonzero(r >= threshold)), k)
