"""Wilcoxon signed-rank test with an exact small-sample path."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy.stats import norm, rankdata

EXACT_MAX_PAIRS = 20


def signed_ranks(x: Sequence[float], y: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Average ranks of |x - y| and the sign of each nonzero difference."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be paired 1-D samples of equal length")
    if x.size < 2:
        raise ValueError("need at least two pairs")
    d = x - y
    d = d[d != 0]
    return rankdata(np.abs(d)), np.sign(d)


def _exact_null_counts(ranks: np.ndarray) -> np.ndarray:
    """counts[s] = number of sign assignments whose doubled W+ equals s.

    Average ranks are multiples of 1/2, so doubling makes them integers and the
    null distribution becomes a subset-sum count.
    """
    doubled = np.rint(2 * ranks).astype(int)
    counts = np.zeros(doubled.sum() + 1, dtype=object)
    counts[0] = 1
    for r in doubled:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: counts.size - r]
        counts = counts + shifted
    return counts


def wilcoxon_signed_rank(
    x: Sequence[float],
    y: Sequence[float],
    alternative: str = "two-sided",
) -> float:
    """p-value of the Wilcoxon signed-rank test for paired samples.

    Zero differences are dropped and tied |differences| share their average
    rank. Up to 20 nonzero pairs the null distribution of W+ is enumerated
    exactly; beyond that a normal approximation with continuity and tie
    corrections is used. If every difference is zero the p-value is 1.0.

    ``alternative`` is "two-sided" or "greater" (x tends to exceed y).
    """
    if alternative not in ("two-sided", "greater"):
        raise ValueError("alternative must be 'two-sided' or 'greater'")
    ranks, signs = signed_ranks(x, y)
    m = ranks.size
    if m == 0:
        return 1.0
    w_plus = float(ranks[signs > 0].sum())

    if m <= EXACT_MAX_PAIRS:
        counts = _exact_null_counts(ranks)
        total = 2**m
        w2 = int(round(2 * w_plus))
        upper = sum(counts[w2:]) / total
        if alternative == "greater":
            return float(upper)
        lower = sum(counts[: w2 + 1]) / total
        return float(min(1.0, 2 * min(lower, upper)))

    mean = m * (m + 1) / 4
    _, tie_sizes = np.unique(ranks, return_counts=True)
    var = m * (m + 1) * (2 * m + 1) / 24 - np.sum(tie_sizes**3 - tie_sizes) / 48
    sd = math.sqrt(var)
    if alternative == "greater":
        return float(norm.sf((w_plus - mean - 0.5) / sd))
    z = (abs(w_plus - mean) - 0.5) / sd
    return float(min(1.0, 2 * norm.sf(max(z, 0.0))))
