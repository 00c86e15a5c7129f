"""On-policy Best-of-N reward transforms and baseline advantage schemes.

All functions take rewards in the original generation order and return one
value per generation in that same order. Internally the weight matrices live
in ascending-sorted index space.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from maxk.combinatorics import binom_ratio
from maxk.errors import InsufficientGroupError, LooUndefinedError
from maxk.metrics import as_reward_group, check_k

ZSCORE_EPS = 1e-8
ZERO_SPREAD = 1e-12

ArrayLike = Sequence[float] | np.ndarray


def sort_permutation(rewards: ArrayLike) -> np.ndarray:
    """Indices that sort ``rewards`` ascending; ties keep their original order.

    ``perm[s]`` is the original index of the generation at sorted position s.
    """
    return np.argsort(np.asarray(rewards, dtype=np.float64), kind="stable")


def bon_weights(n: int, k: int) -> np.ndarray:
    """Subset-counting weights for the on-policy max@k gradient, divided by C(n, k).

    Entry (i, j) in sorted space counts the k-subsets that contain generation i
    and whose maximum is generation j:

        w_ii = C(i-1, k-1),   w_ij = C(j-2, k-2) for j > i,   0 below the diagonal.
    """
    check_k(n, k)
    w = np.zeros((n, n))
    for j in range(1, n + 1):
        w[j - 1, j - 1] = binom_ratio(j - 1, k - 1, n, k)
        off = binom_ratio(j - 2, k - 2, n, k)
        if off:
            w[: j - 1, j - 1] = off
    return w


def bon_rewards(rewards: ArrayLike, k: int) -> np.ndarray:
    """Per-generation coefficient of grad log pi in the unbiased max@k gradient.

    Returns r~ with r~_i = sum_j w_ij r_(j) / C(n, k), mapped back to the
    original order. Sum of r~ equals k * max_at_k(rewards, k).
    """
    r = as_reward_group(rewards)
    perm = sort_permutation(r)
    transformed = bon_weights(r.size, k) @ r[perm]
    out = np.empty_like(transformed)
    out[perm] = transformed
    return out


def _require_group(r: np.ndarray) -> None:
    if r.size < 2:
        raise InsufficientGroupError("need at least two generations per group")


def zscore_advantages(rewards: ArrayLike, eps: float = ZSCORE_EPS) -> np.ndarray:
    """Group-normalized advantages (r - mean) / (std + eps), population std.

    A group with zero spread gets all-zero advantages. Spread below
    ``ZERO_SPREAD`` relative to the largest magnitude counts as zero: transformed
    rewards of a constant group differ only by rounding.
    """
    r = np.asarray(rewards, dtype=np.float64)
    _require_group(r)
    std = r.std()
    if std <= ZERO_SPREAD * max(np.abs(r).max(), np.finfo(float).tiny):
        return np.zeros_like(r)
    return (r - r.mean()) / (std + eps)


def bon_mean_advantages(rewards: ArrayLike, k: int) -> np.ndarray:
    r = as_reward_group(rewards)
    _require_group(r)
    return zscore_advantages(bon_rewards(r, k))


def bon_max_mean_advantages(rewards: ArrayLike) -> np.ndarray:
    """Advantage r_i - mean(r) for every generation tied at the group maximum, else 0."""
    r = as_reward_group(rewards)
    _require_group(r)
    is_max = r == r.max()
    return np.where(is_max, r - r.mean(), 0.0)


def bon_max_second_advantages(rewards: ArrayLike) -> np.ndarray:
    """Advantage r_max - (best reward strictly below r_max) for the maximizers, else 0."""
    r = as_reward_group(rewards)
    _require_group(r)
    top = r.max()
    below = r[r != top]
    if below.size == 0:
        return np.zeros_like(r)
    return np.where(r == top, top - below.max(), 0.0)


def loo1_advantages(rewards: ArrayLike, k: int) -> np.ndarray:
    """Leave-one-out baseline for the on-policy max@k gradient.

    For generation i the advantage is

        (1 / C(n, k)) * sum over k-subsets I containing i of [max(I) - max(I minus i)].

    The first half is ``bon_rewards``. For the second half, drop generation i at
    sorted position s: the remaining (k-1)-subsets have total maximum

        b_s = sum_{j<s} C(j-1, k-2) r_(j) + sum_{j>s} C(j-2, k-2) r_(j),

    which satisfies b_1 = sum_{j>=2} C(j-2, k-2) r_(j) and
    b_{s+1} = b_s + C(s-1, k-2) (r_(s) - r_(s+1)).
    """
    r = as_reward_group(rewards)
    n = r.size
    if k < 2:
        raise LooUndefinedError("leave-one-out needs k >= 2")
    check_k(n, k)
    perm = sort_permutation(r)
    rs = r[perm]
    first = bon_weights(n, k) @ rs

    # b is carried already divided by C(n, k)
    b = np.empty(n)
    b[0] = sum(binom_ratio(j - 2, k - 2, n, k) * rs[j - 1] for j in range(2, n + 1))
    for s in range(1, n):
        b[s] = b[s - 1] + binom_ratio(s - 1, k - 2, n, k) * (rs[s - 1] - rs[s])
    out = np.empty(n)
    out[perm] = first - b
    return out


def bon_rewards_many(rewards: np.ndarray, k: int) -> np.ndarray:
    """Row-wise ``bon_rewards`` for a (groups, n) reward matrix."""
    r = np.asarray(rewards, dtype=np.float64)
    if r.ndim != 2:
        raise ValueError("expected a 2-D (groups, n) array")
    order = np.argsort(r, axis=1, kind="stable")
    transformed = np.take_along_axis(r, order, axis=1) @ bon_weights(r.shape[1], k).T
    out = np.empty_like(transformed)
    np.put_along_axis(out, order, transformed, axis=1)
    return out
