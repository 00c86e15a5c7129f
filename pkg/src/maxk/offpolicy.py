"""First-order off-policy correction of the Best-of-N weights.

With importance ratios rho_i = 1 + delta_i between the current and the
sampling policy, the product over a subset is linearized to
1 + sum of the subset's deltas. Regrouping that sum by subset maximum gives
closed-form weights w' that reduce to the on-policy weights when all deltas
vanish.
"""

from __future__ import annotations

import numpy as np

from maxk.combinatorics import binom_ratio
from maxk.metrics import as_reward_group, check_k
from maxk.shaping import ArrayLike, sort_permutation

DEFAULT_CLAMP = 0.2


def clamp_deltas(deltas: ArrayLike, clamp: float = DEFAULT_CLAMP) -> np.ndarray:
    if clamp <= 0:
        raise ValueError("clamp must be positive")
    d = np.asarray(deltas, dtype=np.float64)
    if not np.all(np.isfinite(d)):
        raise ValueError("deltas must be finite")
    return np.clip(d, -clamp, clamp)


def offpolicy_weights(deltas: ArrayLike, n: int, k: int) -> np.ndarray:
    """Corrected weight matrix w' / C(n, k) in sorted space.

    ``deltas`` must already be permuted into ascending-reward order. For ranks
    i <= j (1-based):

        w'_ii = C(i-1, k-1)(1 + d_i) + C(i-2, k-2) * sum_{l<i} d_l
        w'_ij = C(j-2, k-2)(1 + d_i + d_j) + C(j-3, k-3) * sum_{l<j, l!=i} d_l
    """
    check_k(n, k)
    d = np.asarray(deltas, dtype=np.float64)
    if d.shape != (n,):
        raise ValueError(f"expected {n} deltas, got shape {d.shape}")
    before = np.cumsum(d) - d  # sum of deltas at strictly lower ranks
    w = np.zeros((n, n))
    for j in range(1, n + 1):
        c1 = binom_ratio(j - 1, k - 1, n, k)
        c2 = binom_ratio(j - 2, k - 2, n, k)
        c3 = binom_ratio(j - 3, k - 3, n, k)
        jj = j - 1
        w[jj, jj] = c1 * (1.0 + d[jj]) + c2 * before[jj]
        if j > 1:
            i = np.arange(jj)
            w[i, jj] = c2 * (1.0 + d[i] + d[jj]) + c3 * (before[jj] - d[i])
    return w


def offpolicy_rewards(
    rewards: ArrayLike,
    deltas: ArrayLike,
    k: int,
    clamp: float = DEFAULT_CLAMP,
) -> np.ndarray:
    """Off-policy Best-of-N coefficients in original generation order.

    Deltas are clamped first, then permuted alongside the rewards.
    """
    r = as_reward_group(rewards)
    d = clamp_deltas(deltas, clamp)
    if d.shape != r.shape:
        raise ValueError("rewards and deltas must have the same length")
    perm = sort_permutation(r)
    transformed = offpolicy_weights(d[perm], r.size, k) @ r[perm]
    out = np.empty_like(transformed)
    out[perm] = transformed
    return out
