"""Brute-force references by explicit subset enumeration.

Everything here is deliberately naive. Closed-form code elsewhere in the
package is checked against these functions, never the other way round.
"""

from __future__ import annotations

import math
from itertools import combinations
from typing import Sequence

import numpy as np

from maxk.bandit import BanditEnv, CategoricalPolicy, probs
from maxk.errors import InvalidKError, LooUndefinedError, OracleTooLargeError

MAX_ORACLE_N = 20
FD_STEP = 1e-5


def _prepare(rewards, k: int) -> list[float]:
    r = [float(x) for x in rewards]
    n = len(r)
    if n > MAX_ORACLE_N:
        raise OracleTooLargeError(f"oracle limited to n <= {MAX_ORACLE_N}, got {n}")
    if not 1 <= k <= n:
        raise InvalidKError(f"k must satisfy 1 <= k <= n, got k={k}, n={n}")
    return r


def subsets(n: int, k: int):
    """All k-subsets of range(n) as strictly increasing tuples."""
    return combinations(range(n), k)


def oracle_max_at_k(rewards: Sequence[float], k: int) -> float:
    r = _prepare(rewards, k)
    total = sum(max(r[j] for j in s) for s in subsets(len(r), k))
    return total / math.comb(len(r), k)


def oracle_pass_at_k(n: int, c: int, k: int) -> float:
    """Fraction of k-subsets of c correct + (n - c) wrong items holding a correct one."""
    flags = [True] * c + [False] * (n - c)
    hits = sum(any(flags[j] for j in s) for s in subsets(n, k))
    return hits / math.comb(n, k)


def oracle_bon_rewards(rewards: Sequence[float], k: int) -> np.ndarray:
    r = _prepare(rewards, k)
    n = len(r)
    out = np.zeros(n)
    for s in subsets(n, k):
        m = max(r[j] for j in s)
        for i in s:
            out[i] += m
    return out / math.comb(n, k)


def oracle_offpolicy_linearized(
    rewards: Sequence[float], deltas: Sequence[float], k: int
) -> np.ndarray:
    r = _prepare(rewards, k)
    d = [float(x) for x in deltas]
    n = len(r)
    out = np.zeros(n)
    for s in subsets(n, k):
        m = max(r[j] for j in s) * (1.0 + sum(d[j] for j in s))
        for i in s:
            out[i] += m
    return out / math.comb(n, k)


def oracle_offpolicy_full(
    rewards: Sequence[float], ratios: Sequence[float], k: int
) -> np.ndarray:
    r = _prepare(rewards, k)
    rho = [float(x) for x in ratios]
    if any(x <= 0 for x in rho):
        raise ValueError("importance ratios must be positive")
    n = len(r)
    out = np.zeros(n)
    for s in subsets(n, k):
        m = max(r[j] for j in s) * math.prod(rho[j] for j in s)
        for i in s:
            out[i] += m
    return out / math.comb(n, k)


def oracle_loo1(rewards: Sequence[float], k: int) -> np.ndarray:
    if k < 2:
        raise LooUndefinedError("leave-one-out needs k >= 2")
    r = _prepare(rewards, k)
    n = len(r)
    out = np.zeros(n)
    for s in subsets(n, k):
        m = max(r[j] for j in s)
        for i in s:
            out[i] += m - max(r[j] for j in s if j != i)
    return out / math.comb(n, k)


def oracle_exact_objective(policy: CategoricalPolicy, env: BanditEnv, k: int) -> float:
    """E[max of k i.i.d. rewards] under the reward mixture the policy induces.

    With F the mixture CDF over distinct values v, P(max = v) = F(v)^k - F(v-)^k.
    """
    values, mass = env.reward_distribution(probs(policy))
    cdf = np.minimum(np.cumsum(mass), 1.0)
    below = np.concatenate(([0.0], cdf[:-1]))
    return float(np.sum(values * (cdf**k - below**k)))


def oracle_exact_gradient(
    policy: CategoricalPolicy, env: BanditEnv, k: int, h: float = FD_STEP
) -> np.ndarray:
    """Central finite differences of the exact objective w.r.t. the logits."""
    theta = policy.logits
    grad = np.zeros_like(theta)
    for m in range(theta.size):
        step = np.zeros_like(theta)
        step[m] = h
        up = oracle_exact_objective(CategoricalPolicy(theta + step), env, k)
        down = oracle_exact_objective(CategoricalPolicy(theta - step), env, k)
        grad[m] = (up - down) / (2 * h)
    return grad
