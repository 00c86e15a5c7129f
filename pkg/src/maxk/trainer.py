"""GRPO-style training on bandit environments.

Every objective shares the clipped surrogate with a KL penalty towards the
policy that sampled the batch; objectives differ only in how advantages are
computed from the sampled rewards.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from maxk import shaping
from maxk.bandit import (
    BanditEnv,
    CategoricalPolicy,
    SampleBatch,
    kl_divergence,
    log_probs,
    make_rng,
    policy_entropy,
    probs,
    sample_batch,
)
from maxk.errors import ConfigError, NumericalFailure
from maxk.metrics import max_at_k
from maxk.offpolicy import offpolicy_rewards
from maxk.oracle import oracle_exact_objective

log = logging.getLogger(__name__)

OBJECTIVES = (
    "vanilla-zscore",
    "bon-mean",
    "bon-max-mean",
    "bon-max-second",
    "loo1",
    "offpolicy-bon",
)
# How offpolicy-bon turns transformed rewards into advantages:
#   zscore  group z-score, as for bon-mean (all zeros when k == n)
#   none    n * r~, so the surrogate gradient at rho = 1 is sum_i r~_i grad log pi_i
#   ema     n * r~ minus an exponential moving average of that quantity over
#           earlier batches; the baseline never sees the current batch
NORMALIZATIONS = ("zscore", "none", "ema")

TRACE_COLUMNS = [
    "step",
    "objective",
    "n",
    "k",
    "exact_max_at_1",
    "exact_max_at_k",
    "entropy",
    "kl_to_init",
    "mean_reward",
]


@dataclass(frozen=True)
class TrainConfig:
    objective: str = "vanilla-zscore"
    n: int = 8
    k: int = 8
    lr: float = 0.1
    beta: float = 0.01
    epsilon: float = 0.2
    ppo_iters: int = 3
    steps: int = 300
    clamp_delta: float = 0.2
    seed: int = 0
    binarize_threshold: float | None = None
    offpolicy_normalize: str = "ema"
    baseline_decay: float = 0.9

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise ConfigError(
                f"unknown objective {self.objective!r}; valid choices: {', '.join(OBJECTIVES)}"
            )
        if self.offpolicy_normalize not in NORMALIZATIONS:
            raise ConfigError(
                f"offpolicy_normalize must be one of {NORMALIZATIONS}, got {self.offpolicy_normalize!r}"
            )
        if not 1 <= self.k <= self.n:
            raise ConfigError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")
        if not 0.0 <= self.baseline_decay < 1.0:
            raise ConfigError("baseline_decay must lie in [0, 1)")
        if self.ppo_iters < 1 or self.steps < 0:
            raise ConfigError("ppo_iters must be >= 1 and steps >= 0")
        for name in ("lr", "beta", "epsilon", "clamp_delta"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)


@dataclass
class StepRecord:
    step: int
    exact_max_at_1: float
    exact_max_at_k: float
    entropy: float
    kl_to_init: float
    mean_reward: float
    probs: list[float]


@dataclass
class TrainTrace:
    config: TrainConfig
    env_id: str
    records: list[StepRecord] = field(default_factory=list)
    failure: str | None = None

    @property
    def final(self) -> StepRecord:
        return self.records[-1]

    def metric(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(TRACE_COLUMNS)
            for r in self.records:
                writer.writerow([
                    r.step, self.config.objective, self.config.n, self.config.k,
                    repr(r.exact_max_at_1), repr(r.exact_max_at_k), repr(r.entropy),
                    repr(r.kl_to_init), repr(r.mean_reward),
                ])

    def to_dict(self) -> dict:
        return {
            "env": self.env_id,
            "config": asdict(self.config),
            "failure": self.failure,
            "steps": [asdict(r) for r in self.records],
        }

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))


def _effective_rewards(rewards: np.ndarray, config: TrainConfig) -> np.ndarray:
    if config.binarize_threshold is None:
        return rewards
    return (rewards >= config.binarize_threshold).astype(np.float64)


def advantages_for(
    objective: str,
    batch: SampleBatch,
    current: CategoricalPolicy,
    config: TrainConfig,
    baseline: float | None = None,
) -> np.ndarray:
    """Advantage per completion, in batch order, for the given objective.

    ``baseline`` is only read by offpolicy-bon in ``ema`` mode; it must be
    computed from earlier batches.
    """
    r = _effective_rewards(batch.rewards, config)
    k = config.k
    if objective == "vanilla-zscore":
        return shaping.zscore_advantages(r)
    if objective == "bon-mean":
        return shaping.bon_mean_advantages(r, k)
    if objective == "bon-max-mean":
        return shaping.bon_max_mean_advantages(r)
    if objective == "bon-max-second":
        return shaping.bon_max_second_advantages(r)
    if objective == "loo1":
        return shaping.loo1_advantages(r, k)
    if objective == "offpolicy-bon":
        deltas = np.exp(log_probs(current)[batch.actions] - batch.old_logprobs) - 1.0
        transformed = offpolicy_rewards(r, deltas, k, config.clamp_delta)
        if config.offpolicy_normalize == "zscore":
            return shaping.zscore_advantages(transformed)
        scaled = r.size * transformed
        if config.offpolicy_normalize == "ema" and baseline is not None:
            return scaled - baseline
        return scaled
    raise ConfigError(f"unknown objective {objective!r}; valid choices: {', '.join(OBJECTIVES)}")


def surrogate_gradient(
    policy: CategoricalPolicy,
    old: CategoricalPolicy,
    batch: SampleBatch,
    advantages: np.ndarray,
    epsilon: float,
    beta: float,
) -> np.ndarray:
    """Analytic gradient of the clipped surrogate minus beta * KL(policy || old).

    A completion contributes rho_i A_i grad log pi(a_i) unless the clip is
    binding (A > 0 and rho > 1 + eps, or A < 0 and rho < 1 - eps).
    """
    p = probs(policy)
    lp = log_probs(policy)
    rho = np.exp(lp[batch.actions] - batch.old_logprobs)
    active = np.where(advantages >= 0, rho <= 1.0 + epsilon, rho >= 1.0 - epsilon)
    coef = np.where(active, rho * advantages, 0.0) / len(batch)
    # sum_i coef_i (e_{a_i} - p)
    grad = np.bincount(batch.actions, weights=coef, minlength=p.size) - coef.sum() * p
    diff = lp - log_probs(old)
    kl = float(np.sum(p * diff))
    grad -= beta * p * (diff - kl)
    return grad


def grpo_step(
    policy: CategoricalPolicy,
    old: CategoricalPolicy,
    batch: SampleBatch,
    config: TrainConfig,
    baseline: float | None = None,
) -> CategoricalPolicy:
    """One gradient-ascent step on the clipped surrogate for a fixed batch."""
    adv = advantages_for(config.objective, batch, policy, config, baseline)
    grad = surrogate_gradient(policy, old, batch, adv, config.epsilon, config.beta)
    if not np.all(np.isfinite(grad)):
        raise NumericalFailure(
            "non-finite surrogate gradient",
            state={
                "logits": policy.logits.tolist(),
                "old_logits": old.logits.tolist(),
                "actions": batch.actions.tolist(),
                "rewards": batch.rewards.tolist(),
                "advantages": adv.tolist(),
            },
        )
    return CategoricalPolicy(policy.logits + config.lr * grad)


def _record(step, policy, init, env, config, mean_reward) -> StepRecord:
    return StepRecord(
        step=step,
        exact_max_at_1=oracle_exact_objective(policy, env, 1),
        exact_max_at_k=oracle_exact_objective(policy, env, config.k),
        entropy=policy_entropy(policy),
        kl_to_init=kl_divergence(policy, init),
        mean_reward=mean_reward,
        probs=probs(policy).tolist(),
    )


def run_training(
    env: BanditEnv,
    config: TrainConfig,
    init: CategoricalPolicy | None = None,
) -> TrainTrace:
    """Run ``config.steps`` outer steps, each with ``ppo_iters`` updates on one batch.

    Batch t draws from the PCG64 stream seeded by (seed, t), so traces are
    reproducible and independent across steps. Record 0 describes the initial
    policy; ``mean_reward`` there is NaN since nothing has been sampled yet.
    """
    policy = init if init is not None else CategoricalPolicy.uniform(env.num_arms)
    start = policy
    trace = TrainTrace(config=config, env_id=env.task_id)
    trace.records.append(_record(0, policy, start, env, config, float("nan")))
    baseline = None
    for step in range(1, config.steps + 1):
        old = policy
        batch = sample_batch(old, env, config.n, make_rng((config.seed, step)))
        try:
            for _ in range(config.ppo_iters):
                policy = grpo_step(policy, old, batch, config, baseline)
        except NumericalFailure as exc:
            log.error("numerical failure at step %d: %s", step, exc)
            trace.failure = f"step {step}: {exc}"
            exc.state["trace"] = trace.to_dict()
            raise
        trace.records.append(
            _record(step, policy, start, env, config, float(batch.rewards.mean()))
        )
        if config.objective == "offpolicy-bon" and config.offpolicy_normalize == "ema":
            baseline = _update_baseline(baseline, batch, config)
    return trace


def _update_baseline(baseline: float | None, batch: SampleBatch, config: TrainConfig) -> float:
    r = _effective_rewards(batch.rewards, config)
    # mean of n * r~ at delta = 0 is k * max@k of the batch
    value = config.k * max_at_k(r, config.k)
    if baseline is None:
        return value
    return config.baseline_decay * baseline + (1.0 - config.baseline_decay) * value


def with_overrides(config: TrainConfig, **overrides) -> TrainConfig:
    return replace(config, **{k: v for k, v in overrides.items() if v is not None})
