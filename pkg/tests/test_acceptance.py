"""Exit criteria for the package, one test per criterion.

Each test records a one-line verdict that the terminal summary prints after
the run (see conftest.py).
"""

import itertools
import json
import math
import time

import numpy as np
import pytest

from maxk.bandit import CategoricalPolicy, partial_credit, safe_vs_risky
from maxk.cli import main
from maxk.metrics import max_at_k, pass_at_k_from_rewards
from maxk.offpolicy import offpolicy_rewards, offpolicy_weights
from maxk.oracle import (
    oracle_bon_rewards,
    oracle_exact_gradient,
    oracle_loo1,
    oracle_max_at_k,
    oracle_offpolicy_linearized,
)
from maxk.shaping import bon_rewards, bon_weights, loo1_advantages
from maxk.stats import wilcoxon_signed_rank
from maxk.trainer import TrainConfig, run_training
from maxk.verify import UNBIASED_LOGITS, brute_force_wilcoxon, first_order_gap_ratio, mc_bon_gradient

RESULTS: dict[int, tuple[bool, str]] = {}
SEEDS = [0, 1, 2, 3, 4]
GROUPS = 1000


def record(number, ok, detail):
    RESULTS[number] = (bool(ok), detail)
    assert ok, f"criterion {number}: {detail}"


def random_groups(seed):
    rng = np.random.default_rng(seed)
    for t in range(GROUPS):
        n = int(rng.integers(1, 11))
        r = rng.choice([0.0, 0.5, 1.0], n) if t % 4 == 0 else rng.random(n)
        yield rng, r


def test_c01_metric_estimators_exact():
    t0 = time.perf_counter()
    worst = 0.0
    for rng, r in random_groups(1):
        threshold = float(rng.choice([0.5, 0.9, 1.0]))
        for k in range(1, r.size + 1):
            worst = max(worst, abs(max_at_k(r, k) - oracle_max_at_k(r, k)))
            hits = [any(r[j] >= threshold for j in s)
                    for s in itertools.combinations(range(r.size), k)]
            worst = max(worst, abs(pass_at_k_from_rewards(r, threshold, k) - np.mean(hits)))
    elapsed = time.perf_counter() - t0
    record(1, worst <= 1e-10 and elapsed <= 10,
           f"max |err| {worst:.2e} (tol 1e-10), {elapsed:.1f}s (limit 10s)")


def test_c02_on_policy_transform_exact():
    worst_oracle = worst_sum = worst_mass = 0.0
    for _, r in random_groups(2):
        for k in range(1, r.size + 1):
            got = bon_rewards(r, k)
            worst_oracle = max(worst_oracle, np.abs(got - oracle_bon_rewards(r, k)).max())
            worst_sum = max(worst_sum, abs(got.sum() - k * oracle_max_at_k(r, k)))
    for n in range(1, 13):
        for k in range(1, n + 1):
            worst_mass = max(worst_mass, abs(bon_weights(n, k).sum() - k))
    ok = worst_oracle <= 1e-10 and worst_mass <= 1e-12 and worst_sum <= 1e-10
    record(2, ok, f"oracle {worst_oracle:.2e}, mass {worst_mass:.2e}, sum identity {worst_sum:.2e}")


def test_c03_off_policy_linearized_exact():
    worst = worst_zero = 0.0
    for rng, r in random_groups(3):
        d = rng.uniform(-0.2, 0.2, r.size)
        for k in range(1, r.size + 1):
            worst = max(worst, np.abs(offpolicy_rewards(r, d, k, clamp=0.2)
                                      - oracle_offpolicy_linearized(r, d, k)).max())
            worst_zero = max(worst_zero, np.abs(offpolicy_rewards(r, np.zeros(r.size), k)
                                                - oracle_bon_rewards(r, k)).max())
    for n in range(1, 13):
        for k in range(1, n + 1):
            worst_zero = max(worst_zero, np.abs(offpolicy_weights(np.zeros(n), n, k)
                                                - bon_weights(n, k)).max())
    ratio = first_order_gap_ratio(trials=100)
    ok = worst <= 1e-10 and worst_zero <= 1e-12 and ratio >= 3.5
    record(3, ok, f"linearized {worst:.2e}, zero-delta {worst_zero:.2e}, "
                  f"gap ratio {ratio:.2f} (need >= 3.5)")


def test_c04_loo1_matches_oracle():
    worst = 0.0
    covered = set()
    for _, r in random_groups(4):
        for k in range(2, r.size + 1):
            covered.add((r.size, k))
            worst = max(worst, np.abs(loo1_advantages(r, k) - oracle_loo1(r, k)).max())
    full = {(n, k) for n in range(2, 11) for k in range(2, n + 1)}
    record(4, worst <= 1e-10 and covered == full,
           f"max |err| {worst:.2e} over {len(covered)}/{len(full)} (n, k) pairs")


def test_c05_gradient_unbiased():
    t0 = time.perf_counter()
    env = safe_vs_risky()
    policy = CategoricalPolicy(UNBIASED_LOGITS)
    worst = 0.0
    for k in (2, 4, 8):
        truth = oracle_exact_gradient(policy, env, k)
        mean, se = mc_bon_gradient(policy, env, 8, k, 200_000, seed=500 + k)
        worst = max(worst, float(np.max(np.abs(mean - truth) / se)))
    elapsed = time.perf_counter() - t0
    record(5, worst <= 4.0 and elapsed <= 300,
           f"max |z| {worst:.2f} (limit 4), {elapsed:.1f}s (limit 300s)")


@pytest.fixture(scope="module")
def safe_vs_risky_runs():
    env = safe_vs_risky()
    t0 = time.perf_counter()
    runs = {}
    for objective in ("vanilla-zscore", "offpolicy-bon"):
        for seed in SEEDS:
            cfg = TrainConfig(objective=objective, n=8, k=8, lr=0.1, steps=300, beta=0.01,
                              epsilon=0.2, ppo_iters=3, seed=seed)
            runs[objective, seed] = run_training(env, cfg)
    return runs, time.perf_counter() - t0


def test_c06_pass_at_k_crossing(safe_vs_risky_runs):
    runs, elapsed = safe_vs_risky_runs
    van = [runs["vanilla-zscore", s].final for s in SEEDS]
    off = [runs["offpolicy-bon", s].final for s in SEEDS]
    ok = (all(f.exact_max_at_1 >= 0.55 and f.exact_max_at_k <= 0.65 for f in van)
          and all(f.exact_max_at_k >= 0.95 for f in off) and elapsed <= 60)
    record(6, ok,
           f"vanilla max@1 min {min(f.exact_max_at_1 for f in van):.3f}, "
           f"max@8 max {max(f.exact_max_at_k for f in van):.3f}; "
           f"offpolicy-bon max@8 min {min(f.exact_max_at_k for f in off):.3f}; {elapsed:.1f}s")


def test_c07_entropy_collapse(safe_vs_risky_runs):
    runs, _ = safe_vs_risky_runs
    ratios, margins = [], []
    for s in SEEDS:
        van, off = runs["vanilla-zscore", s], runs["offpolicy-bon", s]
        ratios.append(van.final.entropy / van.records[0].entropy)
        margins.append(off.final.entropy - van.final.entropy)
    ok = max(ratios) < 0.25 and min(margins) > 0
    record(7, ok, f"vanilla final/initial entropy max {max(ratios):.3f} (< 0.25); "
                  f"min offpolicy-vanilla entropy gap {min(margins):.3f} (> 0)")


def steps_to_reach(trace, target):
    hits = np.nonzero(trace.metric("exact_max_at_1") >= target)[0]
    return int(hits[0]) if hits.size else math.inf


def test_c08_binary_vs_continuous():
    env = partial_credit()
    target = 0.9 * env.arm_means().max()
    pairs = []
    for seed in SEEDS:
        cont = run_training(env, TrainConfig(seed=seed))
        binary = run_training(env, TrainConfig(seed=seed, binarize_threshold=1.0))
        pairs.append((steps_to_reach(cont, target), steps_to_reach(binary, target)))
    ok = all(c < math.inf and 2 * c <= b for c, b in pairs)
    record(8, ok, "steps to max@1 >= 0.9 * best mean (continuous, binary): "
                  + ", ".join(f"({c}, {b})" for c, b in pairs))


def test_c09_wilcoxon_exact():
    rng = np.random.default_rng(9)
    worst = 0.0
    for n in range(2, 13):
        for _ in range(20):
            x = np.round(rng.normal(0.2, 1, n), 1)
            y = np.round(rng.normal(0, 1, n), 1)
            worst = max(worst, abs(wilcoxon_signed_rank(x, y) - brute_force_wilcoxon(x, y)))
    p5 = wilcoxon_signed_rank([0.9, 0.8, 0.95, 0.7, 0.85], [0.1, 0.2, 0.3, 0.4, 0.5])
    record(9, worst <= 1e-12 and p5 == 0.0625,
           f"max |p - brute force| {worst:.2e}; all-positive n=5 p = {p5}")


def test_c10_run_is_deterministic(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({
        "environments": ["safe_vs_risky", "partial_credit"],
        "objectives": ["vanilla-zscore", "offpolicy-bon", "loo1"],
        "seeds": [0, 1],
        "config": {"steps": 40, "k": 4},
    }))
    assert main(["run", "--spec", str(spec), "--out", str(tmp_path / "a")]) == 0
    assert main(["run", "--spec", str(spec), "--out", str(tmp_path / "b"), "--jobs", "3"]) == 0
    files = sorted((tmp_path / "a" / "traces").glob("*.csv"))
    same = [f.read_bytes() == (tmp_path / "b" / "traces" / f.name).read_bytes() for f in files]
    record(10, len(files) == 12 and all(same), f"{sum(same)}/{len(files)} trace files identical")
