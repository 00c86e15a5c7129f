import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from maxk.combinatorics import binom, binom_ratio
from maxk.errors import ZeroDenominatorError


def pascal(rows):
    table = [[1]]
    for a in range(1, rows + 1):
        prev = table[-1]
        table.append([1] + [prev[b - 1] + prev[b] for b in range(1, a)] + [1])
    return table


@pytest.mark.parametrize("a,b,expected", [(5, 2, 10), (3, 5, 0), (4, -1, 0), (-1, -1, 0),
                                          (0, 0, 1), (-3, 2, 0)])
def test_binom_examples(a, b, expected):
    assert binom(a, b) == expected


def test_binom_matches_pascal_recurrence():
    table = pascal(40)
    for a in range(41):
        for b in range(a + 1):
            assert binom(a, b) == table[a][b]


@given(st.integers(0, 200), st.data())
def test_binom_symmetry(a, data):
    b = data.draw(st.integers(0, a))
    assert binom(a, b) == binom(a, a - b)


def test_binom_overflow_is_explicit():
    with pytest.raises(OverflowError):
        binom(100_000, 50_000)


class TestBinomRatio:
    def test_small_examples(self):
        assert binom_ratio(2, 1, 3, 2) == pytest.approx(2 / 3, rel=1e-15)
        assert binom_ratio(1, -1, 3, 2) == 0.0

    def test_against_exact_rational(self):
        exact = Fraction(math.comb(60, 30), math.comb(64, 32))
        assert binom_ratio(60, 30, 64, 32) == pytest.approx(float(exact), rel=1e-12)

    @given(st.integers(0, 64), st.integers(0, 64), st.data())
    def test_ratio_times_denominator(self, n, a, data):
        k = data.draw(st.integers(0, n))
        b = data.draw(st.integers(-2, a + 2))
        expected = Fraction(binom(a, b), math.comb(n, k))
        assert binom_ratio(a, b, n, k) == pytest.approx(float(expected), rel=1e-12, abs=0)

    def test_huge_arguments_stay_finite(self):
        # both coefficients exceed float range; the ratio does not
        exact = Fraction(math.comb(2999, 1499), math.comb(3000, 1500))
        got = binom_ratio(2999, 1499, 3000, 1500)
        assert math.isfinite(got)
        assert got == pytest.approx(float(exact), rel=1e-9)

    def test_n256_evaluation_scale(self):
        exact = Fraction(math.comb(200, 127), math.comb(256, 128))
        assert binom_ratio(200, 127, 256, 128) == pytest.approx(float(exact), rel=1e-12)

    def test_zero_denominator(self):
        with pytest.raises(ZeroDenominatorError):
            binom_ratio(1, 1, 3, 5)
