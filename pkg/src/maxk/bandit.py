"""Categorical softmax policies over a finite action set and discrete-reward bandits.

A single action plays the role of a whole completion: its log-probability is
the sequence log-probability and its reward is the verifier score. This keeps
E[max@k] and its gradient exactly computable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from maxk.errors import ConfigError

PROB_TOL = 1e-12


@dataclass(frozen=True)
class CategoricalPolicy:
    logits: np.ndarray

    def __post_init__(self):
        logits = np.array(self.logits, dtype=np.float64)
        if logits.ndim != 1 or logits.size < 2:
            raise ValueError("a policy needs at least two actions")
        if not np.all(np.isfinite(logits)):
            raise ValueError("logits must be finite")
        logits.setflags(write=False)
        object.__setattr__(self, "logits", logits)

    @classmethod
    def uniform(cls, m: int) -> "CategoricalPolicy":
        return cls(np.zeros(m))

    @property
    def num_actions(self) -> int:
        return self.logits.size


@dataclass(frozen=True)
class BanditEnv:
    """Per-arm discrete reward distributions, each a tuple of (value, prob) pairs."""

    arms: tuple[tuple[tuple[float, float], ...], ...]
    task_id: str = "custom"
    _values: list[np.ndarray] = field(init=False, repr=False, compare=False)
    _cdfs: list[np.ndarray] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        arms = tuple(tuple((float(v), float(p)) for v, p in arm) for arm in self.arms)
        if not arms:
            raise ValueError("an environment needs at least one arm")
        values, cdfs = [], []
        for a, arm in enumerate(arms):
            if not arm:
                raise ValueError(f"arm {a} has no outcomes")
            v = np.array([x for x, _ in arm])
            p = np.array([x for _, x in arm])
            if np.any(v < 0) or np.any(v > 1):
                raise ValueError(f"arm {a}: reward values must lie in [0, 1]")
            if np.any(p < 0) or abs(p.sum() - 1.0) > PROB_TOL:
                raise ValueError(f"arm {a}: probabilities must be nonnegative and sum to 1")
            values.append(v)
            cdfs.append(np.cumsum(p))
        object.__setattr__(self, "arms", arms)
        object.__setattr__(self, "_values", values)
        object.__setattr__(self, "_cdfs", cdfs)

    @property
    def num_arms(self) -> int:
        return len(self.arms)

    def arm_means(self) -> np.ndarray:
        return np.array([sum(v * p for v, p in arm) for arm in self.arms])

    def reward_distribution(self, action_probs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Distinct reward values (ascending) and their probabilities under a policy."""
        mass: dict[float, float] = {}
        for pa, arm in zip(action_probs, self.arms):
            for v, p in arm:
                mass[v] = mass.get(v, 0.0) + pa * p
        values = np.array(sorted(mass))
        return values, np.array([mass[v] for v in values])

    def sample_rewards(self, actions: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        actions = np.asarray(actions)
        u = rng.random(actions.shape)
        out = np.empty(actions.shape)
        for a in np.unique(actions):
            sel = actions == a
            # min() guards u landing past a cdf that sums to 1 - tiny
            idx = np.minimum(np.searchsorted(self._cdfs[a], u[sel], side="right"),
                             len(self._values[a]) - 1)
            out[sel] = self._values[a][idx]
        return out

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "arms": [[{"value": v, "prob": p} for v, p in arm] for arm in self.arms],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "BanditEnv":
        try:
            arms = [[(o["value"], o["prob"]) for o in arm] for arm in doc["arms"]]
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed environment document: {exc}") from exc
        return cls(arms, task_id=doc.get("task_id", "custom"))

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def from_json(cls, path: str | Path) -> "BanditEnv":
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read environment {path}: {exc}") from exc
        return cls.from_dict(doc)


@dataclass(frozen=True)
class SampleBatch:
    actions: np.ndarray
    rewards: np.ndarray
    old_logprobs: np.ndarray

    def __len__(self) -> int:
        return self.actions.size


# --- fixtures -------------------------------------------------------------

SAFE_ARM = 0
RISKY_ARM = 1


def safe_vs_risky(fillers: int = 8) -> BanditEnv:
    """Arm 0 pays 0.6 always, arm 1 pays 1.0 or 0.0 with equal odds, fillers pay 0.1.

    The mean-reward optimum is arm 0 while the max@k optimum (k >= 2) is arm 1.
    """
    arms = [[(0.6, 1.0)], [(1.0, 0.5), (0.0, 0.5)]] + [[(0.1, 1.0)]] * fillers
    return BanditEnv(arms, task_id="safe_vs_risky")


def linear(m: int = 10) -> BanditEnv:
    """Arm i pays 0.1 * i deterministically."""
    return BanditEnv([[(0.1 * i, 1.0)] for i in range(m)], task_id="linear")


def partial_credit() -> BanditEnv:
    """Arms that mostly earn partial credit; only the best arm sometimes reaches 1.0.

    Arm i < 9 pays 0.05 + 0.07 * i; arm 9 pays 0.9 w.p. 0.9 and 1.0 w.p. 0.1.
    Under a 1.0 pass threshold nearly every reward binarizes to 0.
    """
    arms = [[(round(0.05 + 0.07 * i, 10), 1.0)] for i in range(9)]
    arms.append([(0.9, 0.9), (1.0, 0.1)])
    return BanditEnv(arms, task_id="partial_credit")


FIXTURES = {
    "safe_vs_risky": safe_vs_risky,
    "linear": linear,
    "partial_credit": partial_credit,
}


def load_env(name_or_path: str) -> BanditEnv:
    if name_or_path in FIXTURES:
        return FIXTURES[name_or_path]()
    return BanditEnv.from_json(name_or_path)


# --- policy math ----------------------------------------------------------

def probs(policy: CategoricalPolicy) -> np.ndarray:
    z = policy.logits - policy.logits.max()
    e = np.exp(z)
    return e / e.sum()


def log_probs(policy: CategoricalPolicy) -> np.ndarray:
    z = policy.logits - policy.logits.max()
    return z - np.log(np.exp(z).sum())


def logprob_grad(policy: CategoricalPolicy, action: int) -> np.ndarray:
    """Score function d log pi(action) / d logits = e_action - probs."""
    if not 0 <= action < policy.num_actions:
        raise IndexError(f"action {action} out of range for {policy.num_actions} actions")
    g = -probs(policy)
    g[action] += 1.0
    return g


def policy_entropy(policy: CategoricalPolicy) -> float:
    p = probs(policy)
    lp = log_probs(policy)
    return float(-np.sum(np.where(p > 0, p * lp, 0.0)))


def kl_divergence(policy: CategoricalPolicy, old: CategoricalPolicy) -> float:
    """Exact KL(policy || old) in nats."""
    if policy.num_actions != old.num_actions:
        raise ValueError("policies have different action counts")
    p = probs(policy)
    diff = log_probs(policy) - log_probs(old)
    return float(max(np.sum(np.where(p > 0, p * diff, 0.0)), 0.0))


def make_rng(seed: int | Sequence[int] | np.random.Generator) -> np.random.Generator:
    """PCG64 generator from an int or an int tuple such as (seed, step)."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def sample_batch(
    policy: CategoricalPolicy,
    env: BanditEnv,
    n: int,
    rng: int | Sequence[int] | np.random.Generator,
) -> SampleBatch:
    """Draw n i.i.d. (action, reward) pairs from the full policy distribution."""
    if n < 1:
        raise ValueError("n must be positive")
    if policy.num_actions != env.num_arms:
        raise ValueError("policy and environment disagree on the number of actions")
    gen = make_rng(rng)
    p = probs(policy)
    actions = np.minimum(np.searchsorted(np.cumsum(p), gen.random(n), side="right"),
                         p.size - 1)
    rewards = env.sample_rewards(actions, gen)
    return SampleBatch(actions, rewards, log_probs(policy)[actions])
