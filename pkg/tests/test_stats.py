import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings, strategies as st

from maxk.stats import wilcoxon_signed_rank
from maxk.verify import brute_force_wilcoxon


def test_all_positive_five_pairs():
    assert wilcoxon_signed_rank([1, 2, 3, 4, 5], [0] * 5) == 0.0625


def test_all_positive_one_sided():
    assert wilcoxon_signed_rank([0.9] * 5, [0.1, 0.2, 0.3, 0.4, 0.5], "greater") == 1 / 32


def test_symmetric_differences():
    assert wilcoxon_signed_rank([0.3, -0.3], [0, 0]) == 1.0


def test_all_zero_differences():
    assert wilcoxon_signed_rank([0.4, 0.5, 0.6], [0.4, 0.5, 0.6]) == 1.0


def test_one_flip_in_ten(rng):
    d = np.arange(1, 11, dtype=float)
    d[3] *= -1
    assert wilcoxon_signed_rank(d, np.zeros(10)) == pytest.approx(
        brute_force_wilcoxon(d, np.zeros(10)), abs=1e-15)
    # W- = 4; subsets of 1..10 summing to <= 4: {}, 1, 2, 3, 4, 12, 13
    assert wilcoxon_signed_rank(d, np.zeros(10)) == pytest.approx(2 * 7 / 1024)


@settings(max_examples=150)
@given(st.lists(st.integers(-4, 4), min_size=2, max_size=12))
def test_exact_matches_brute_force(diffs):
    x = np.array(diffs, dtype=float) / 4  # small grid: lots of ties and zeros
    y = np.zeros_like(x)
    assert wilcoxon_signed_rank(x, y) == pytest.approx(brute_force_wilcoxon(x, y), abs=1e-12)


def test_agrees_with_scipy_without_ties(rng):
    for _ in range(20):
        x = rng.normal(0.3, 1, 12)
        assert wilcoxon_signed_rank(x, np.zeros(12)) == pytest.approx(
            scipy.stats.wilcoxon(x, method="exact").pvalue, rel=1e-12)


def test_normal_approximation_beyond_twenty(rng):
    x = rng.normal(0.2, 1, 40)
    assert wilcoxon_signed_rank(x, np.zeros(40)) == pytest.approx(
        scipy.stats.wilcoxon(x, method="approx", correction=True).pvalue, rel=1e-10)


def test_p_value_bounds(rng):
    for n in (2, 5, 15, 25):
        x, y = rng.random(n), rng.random(n)
        for alt in ("two-sided", "greater"):
            assert 0 <= wilcoxon_signed_rank(x, y, alt) <= 1


def test_input_errors():
    with pytest.raises(ValueError):
        wilcoxon_signed_rank([1.0], [0.0])
    with pytest.raises(ValueError):
        wilcoxon_signed_rank([1.0, 2.0], [0.0])
    with pytest.raises(ValueError):
        wilcoxon_signed_rank([1.0, 2.0], [0.0, 0.0], "less-ish")
