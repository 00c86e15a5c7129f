"""Zero-extended binomial coefficients.

``binom(a, b)`` is 0 whenever ``b < 0``, ``a < 0`` or ``b > a``. Every weight
formula downstream relies on this so that terms like ``C(j - 3, k - 3)`` with
``k = 2`` vanish without special-casing.
"""

from __future__ import annotations

import math

from maxk.errors import ZeroDenominatorError

# Results are returned as Python ints, which never wrap. The cap makes
# "overflow" an explicit error instead of an unbounded allocation.
MAX_BINOM_BITS = 4096


def binom(a: int, b: int) -> int:
    """Binomial coefficient C(a, b) with zero extension outside 0 <= b <= a."""
    a, b = int(a), int(b)
    if b < 0 or a < 0 or b > a:
        return 0
    value = math.comb(a, b)
    if value.bit_length() > MAX_BINOM_BITS:
        raise OverflowError(f"C({a}, {b}) exceeds {MAX_BINOM_BITS} bits")
    return value


def binom_ratio(a: int, b: int, n: int, k: int) -> float:
    """Return C(a, b) / C(n, k) as a float.

    Python's int true division is correctly rounded, so for moderate arguments
    the exact integers are divided directly. Past ``_EXACT_LIMIT`` the ratio is
    formed from log-gamma differences, which stays finite whenever the ratio is.

    >>> binom_ratio(2, 1, 3, 2)
    0.6666666666666666
    """
    a, b, n, k = int(a), int(b), int(n), int(k)
    if k < 0 or n < 0 or k > n:
        raise ZeroDenominatorError(f"C({n}, {k}) = 0")
    if b < 0 or a < 0 or b > a:
        return 0.0
    if max(a, n) <= _EXACT_LIMIT:
        return math.comb(a, b) / math.comb(n, k)
    return math.exp(_log_comb(a, b) - _log_comb(n, k))


_EXACT_LIMIT = 2048


def _log_comb(a: int, b: int) -> float:
    return math.lgamma(a + 1) - math.lgamma(b + 1) - math.lgamma(a - b + 1)
