"""Exact binomial bookkeeping and the combinatorial number system."""

from __future__ import annotations

import math
import sys

from .errors import DomainError

EXACT_LIMIT = 10**6
_EPS = sys.float_info.epsilon


def ceil_log2_binomial(n: int, k: int) -> int:
    """``ceil(log2 C(n, k))`` computed exactly.

    Up to ``n = 10**6`` the binomial is formed as an integer. Above that a
    log-Gamma estimate with a conservative error margin is used, and the
    exact integer path is taken whenever the ceiling is not decided by it.
    """
    if not (0 <= k <= n):
        raise DomainError(f"need 0 <= k <= n, got n={n}, k={k}")
    if n <= EXACT_LIMIT:
        return (math.comb(n, k) - 1).bit_length()
    terms = (math.lgamma(n + 1), math.lgamma(k + 1), math.lgamma(n - k + 1))
    value = (terms[0] - terms[1] - terms[2]) / math.log(2)
    # lgamma is accurate to a few ulp of its magnitude; be generous
    margin = 64 * _EPS * sum(abs(t) for t in terms) / math.log(2) + 1e-9
    lo, hi = math.ceil(value - margin), math.ceil(value + margin)
    if lo == hi:
        return lo
    return (math.comb(n, k) - 1).bit_length()


def unrank_combination(index: int, m: int, k: int) -> list[int]:
    """The ``index``-th ``k``-subset of ``{0..m-1}`` in colexicographic order.

    Uses the combinatorial number system: ``index = sum_i C(c_i, i)`` with
    ``c_1 < ... < c_k``. Index 0 is ``{0, ..., k-1}``.
    """
    if not (0 <= k <= m):
        raise DomainError(f"need 0 <= k <= m, got m={m}, k={k}")
    total = math.comb(m, k)
    if not (0 <= index < total):
        raise DomainError(f"index {index} outside [0, C({m},{k}))")
    out = [0] * k
    r = index
    upper = m  # c_i < upper
    for i in range(k, 0, -1):
        c, binom = _largest_c(r, i, upper)
        out[i - 1] = c
        r -= binom
        upper = c
    return out


def _largest_c(r: int, i: int, upper: int) -> tuple[int, int]:
    """Largest ``c < upper`` with ``C(c, i) <= r``, together with ``C(c, i)``.

    A log-Gamma bisection gives a guess that is exact or off by a few units;
    one exact binomial at the guess is then corrected with ratio steps.
    """
    lo, hi = i - 1, upper - 1
    if r == 0 or hi <= lo:
        return lo, 0 if lo < i else 1
    target = math.log(r)
    a, b = lo, hi
    while b - a > 1:
        mid = (a + b) // 2
        if _log_comb(mid, i) <= target:
            a = mid
        else:
            b = mid
    c = a
    binom = math.comb(c, i)
    while binom > r:  # step down: C(c-1, i) = C(c, i) (c - i) / c
        binom = binom * (c - i) // c
        c -= 1
    while c < hi:
        nxt = 1 if c + 1 == i else binom * (c + 1) // (c + 1 - i)
        if nxt > r:
            break
        binom, c = nxt, c + 1
    return c, binom


def _log_comb(n: int, k: int) -> float:
    if k > n:
        return -math.inf
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def rank_combination(positions, m: int) -> int:
    """Inverse of :func:`unrank_combination`."""
    c = sorted(int(x) for x in positions)
    if len(set(c)) != len(c) or (c and (c[0] < 0 or c[-1] >= m)):
        raise DomainError("positions must be distinct integers in [0, m)")
    return sum(math.comb(ci, i) for i, ci in enumerate(c, start=1))
