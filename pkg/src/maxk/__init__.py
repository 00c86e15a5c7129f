"""Max@k / pass@k estimators and Best-of-N policy-gradient reward transforms."""

from maxk.combinatorics import binom, binom_ratio
from maxk.metrics import max_at_k, pass_at_k, pass_at_k_from_rewards
from maxk.shaping import (
    bon_max_mean_advantages,
    bon_max_second_advantages,
    bon_mean_advantages,
    bon_rewards,
    bon_weights,
    loo1_advantages,
    sort_permutation,
    zscore_advantages,
)
from maxk.offpolicy import clamp_deltas, offpolicy_rewards, offpolicy_weights

__all__ = [
    "binom",
    "binom_ratio",
    "max_at_k",
    "pass_at_k",
    "pass_at_k_from_rewards",
    "sort_permutation",
    "bon_weights",
    "bon_rewards",
    "zscore_advantages",
    "bon_mean_advantages",
    "bon_max_mean_advantages",
    "bon_max_second_advantages",
    "loo1_advantages",
    "clamp_deltas",
    "offpolicy_weights",
    "offpolicy_rewards",
]

__version__ = "0.1.0"
