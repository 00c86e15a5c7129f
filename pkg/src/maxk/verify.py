"""Property suite comparing every closed form against its brute-force oracle.

Each check returns a ``CheckResult``; ``run_all`` drives them with fixed seeds.
Module attributes are looked up at call time so a patched implementation is
picked up (that is how the mutation test works).
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from maxk import bandit, metrics, offpolicy, oracle, shaping, stats

SEED = 20240611


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst: float
    tolerance: float
    counterexample: dict | None = None
    seconds: float = 0.0
    detail: str = ""


@dataclass
class _Worst:
    tol: float
    value: float = 0.0
    example: dict | None = field(default=None)

    def update(self, err: float, **example) -> None:
        err = float(err)
        if err > self.value or not np.isfinite(err):
            self.value = err if np.isfinite(err) else math.inf
            if self.value > self.tol:
                self.example = {k: _jsonable(v) for k, v in example.items()}

    @property
    def ok(self) -> bool:
        return self.value <= self.tol


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, np.generic):
        return v.item()
    return v


def random_groups(rng: np.random.Generator, max_n: int, trials: int):
    """Random reward groups; every third one is drawn from a coarse grid to force ties."""
    for t in range(trials):
        n = int(rng.integers(1, max_n + 1))
        if t % 3 == 0:
            yield rng.choice([0.0, 0.25, 0.5, 1.0], size=n)
        else:
            yield rng.random(n)


def check_metrics(max_n: int = 10, trials: int = 1000, tol: float = 1e-10) -> CheckResult:
    rng = np.random.default_rng(SEED)
    w = _Worst(tol)
    for r in random_groups(rng, max_n, trials):
        for k in range(1, r.size + 1):
            w.update(abs(metrics.max_at_k(r, k) - oracle.oracle_max_at_k(r, k)),
                     op="max_at_k", rewards=r, k=k)
    for n in range(1, max_n + 1):
        for c in range(n + 1):
            for k in range(1, n + 1):
                w.update(abs(metrics.pass_at_k(n, c, k) - oracle.oracle_pass_at_k(n, c, k)),
                         op="pass_at_k", n=n, c=c, k=k)
    return CheckResult("metric estimators vs enumeration", w.ok, w.value, tol, w.example)


def check_bon_rewards(max_n: int = 10, trials: int = 1000, tol: float = 1e-10) -> CheckResult:
    rng = np.random.default_rng(SEED + 1)
    w = _Worst(tol)
    for r in random_groups(rng, max_n, trials):
        for k in range(1, r.size + 1):
            got = shaping.bon_rewards(r, k)
            w.update(np.max(np.abs(got - oracle.oracle_bon_rewards(r, k))),
                     op="bon_rewards", rewards=r, k=k)
            w.update(abs(got.sum() - k * oracle.oracle_max_at_k(r, k)),
                     op="sum identity", rewards=r, k=k)
    return CheckResult("on-policy transform vs enumeration", w.ok, w.value, tol, w.example)


def check_weight_mass(max_n: int = 12, tol: float = 1e-12) -> CheckResult:
    w = _Worst(tol)
    for n in range(1, max_n + 1):
        for k in range(1, n + 1):
            w.update(abs(shaping.bon_weights(n, k).sum() - k), op="bon_weights", n=n, k=k)
    return CheckResult("weight mass equals k", w.ok, w.value, tol, w.example)


def check_offpolicy(max_n: int = 10, trials: int = 1000, tol: float = 1e-10) -> CheckResult:
    rng = np.random.default_rng(SEED + 2)
    w = _Worst(tol)
    for r in random_groups(rng, max_n, trials):
        d = rng.uniform(-0.2, 0.2, size=r.size)
        for k in range(1, r.size + 1):
            got = offpolicy.offpolicy_rewards(r, d, k, clamp=0.2)
            w.update(np.max(np.abs(got - oracle.oracle_offpolicy_linearized(r, d, k))),
                     op="offpolicy_rewards", rewards=r, deltas=d, k=k)
    for n in range(1, max_n + 1):
        for k in range(1, n + 1):
            w.update(np.max(np.abs(offpolicy.offpolicy_weights(np.zeros(n), n, k)
                                   - shaping.bon_weights(n, k))),
                     op="zero-delta reduction", n=n, k=k)
    return CheckResult("off-policy transform vs linearized enumeration", w.ok, w.value, tol,
                       w.example)


def first_order_gap_ratio(trials: int = 100, n: int = 8, k: int = 4, scale: float = 0.05,
                          seed: int = SEED + 3) -> float:
    """Mean over trials of gap(delta) / gap(delta / 2), gap = |full - linearized|."""
    rng = np.random.default_rng(seed)
    ratios = []
    for _ in range(trials):
        r = rng.random(n)
        d = rng.uniform(-scale, scale, size=n)
        gaps = []
        for dd in (d, d / 2):
            full = oracle.oracle_offpolicy_full(r, 1.0 + dd, k)
            lin = offpolicy.offpolicy_rewards(r, dd, k, clamp=1.0)
            gaps.append(np.linalg.norm(full - lin))
        ratios.append(gaps[0] / gaps[1])
    return float(np.mean(ratios))


def check_first_order(min_ratio: float = 3.5) -> CheckResult:
    ratio = first_order_gap_ratio()
    return CheckResult("first-order gap shrinks when deltas halve", ratio >= min_ratio, ratio,
                       min_ratio, None if ratio >= min_ratio else {"mean_ratio": ratio},
                       detail=f"mean ratio {ratio:.3f} (need >= {min_ratio})")


def check_loo1(max_n: int = 10, trials: int = 1000, tol: float = 1e-10) -> CheckResult:
    rng = np.random.default_rng(SEED + 4)
    w = _Worst(tol)
    for r in random_groups(rng, max_n, trials):
        for k in range(2, r.size + 1):
            w.update(np.max(np.abs(shaping.loo1_advantages(r, k) - oracle.oracle_loo1(r, k))),
                     op="loo1_advantages", rewards=r, k=k)
    return CheckResult("LOO-1 advantages vs enumeration", w.ok, w.value, tol, w.example)


def brute_force_wilcoxon(x, y) -> float:
    """Two-sided p by listing all 2^m sign assignments of the nonzero ranks."""
    ranks, signs = stats.signed_ranks(x, y)
    m = ranks.size
    if m == 0:
        return 1.0
    w_obs = ranks[signs > 0].sum()
    sums = [sum(r for r, s in zip(ranks, pattern) if s)
            for pattern in itertools.product((0, 1), repeat=m)]
    sums = np.array(sums)
    lower = np.mean(sums <= w_obs + 1e-9)
    upper = np.mean(sums >= w_obs - 1e-9)
    return float(min(1.0, 2 * min(lower, upper)))


def check_wilcoxon(max_n: int = 12, trials: int = 200, tol: float = 1e-12) -> CheckResult:
    rng = np.random.default_rng(SEED + 5)
    w = _Worst(tol)
    for _ in range(trials):
        n = int(rng.integers(2, max_n + 1))
        # rounding creates ties and zeros on purpose
        x = np.round(rng.normal(0.3, 1.0, n), 1)
        y = np.round(rng.normal(0.0, 1.0, n), 1)
        w.update(abs(stats.wilcoxon_signed_rank(x, y) - brute_force_wilcoxon(x, y)),
                 op="wilcoxon", x=x, y=y)
    w.update(abs(stats.wilcoxon_signed_rank([1, 2, 3, 4, 5], [0] * 5) - 0.0625),
             op="all-positive n=5")
    return CheckResult("Wilcoxon exact path vs brute force", w.ok, w.value, tol, w.example)


UNBIASED_LOGITS = np.array([0.6, 0.9, -0.2, 0.1, -0.5, 0.3, 0.0, -0.8, 0.4, -0.1])


def mc_bon_gradient(policy, env, n: int, k: int, batches: int, seed: int):
    """Mean and standard error over batches of sum_i r~_i grad log pi(a_i)."""
    rng = np.random.default_rng(seed)
    p = bandit.probs(policy)
    m = p.size
    grads = np.zeros((batches, m))
    chunk = 50_000
    for lo in range(0, batches, chunk):
        hi = min(batches, lo + chunk)
        actions = rng.choice(m, size=(hi - lo, n), p=p)
        rewards = env.sample_rewards(actions, rng)
        rt = shaping.bon_rewards_many(rewards, k)
        for a in range(m):
            grads[lo:hi, a] = np.sum(rt * (actions == a), axis=1)
        grads[lo:hi] -= rt.sum(axis=1, keepdims=True) * p
    mean = grads.mean(axis=0)
    se = grads.std(axis=0, ddof=1) / math.sqrt(batches)
    return mean, se


def check_unbiasedness(batches: int = 200_000, n: int = 8, ks=(2, 4, 8),
                       max_z: float = 4.0) -> CheckResult:
    env = bandit.safe_vs_risky()
    policy = bandit.CategoricalPolicy(UNBIASED_LOGITS)
    worst = 0.0
    example = None
    for k in ks:
        truth = oracle.oracle_exact_gradient(policy, env, k)
        mean, se = mc_bon_gradient(policy, env, n, k, batches, SEED + 10 + k)
        z = np.abs(mean - truth) / np.maximum(se, 1e-300)
        if z.max() > worst:
            worst = float(z.max())
            if worst > max_z:
                example = {"k": k, "mc_mean": mean.tolist(), "se": se.tolist(),
                           "oracle": truth.tolist()}
    return CheckResult("BoN gradient estimate is unbiased", worst <= max_z, worst, max_z,
                       example, detail=f"max |z| = {worst:.2f} over k in {list(ks)}")


def checks(max_n: int = 10, batches: int = 200_000) -> list[Callable[[], CheckResult]]:
    return [
        lambda: check_metrics(max_n),
        lambda: check_bon_rewards(max_n),
        lambda: check_weight_mass(max(max_n, 12)),
        lambda: check_offpolicy(max_n),
        check_first_order,
        lambda: check_loo1(max_n),
        lambda: check_wilcoxon(),
        lambda: check_unbiasedness(batches),
    ]


def run_all(max_n: int = 10, batches: int = 200_000) -> list[CheckResult]:
    results = []
    for check in checks(max_n, batches):
        t0 = time.perf_counter()
        res = check()
        res.seconds = time.perf_counter() - t0
        results.append(res)
    return results
