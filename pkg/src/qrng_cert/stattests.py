"""A small frequency/runs/byte-distribution battery for bit strings.

The battery is a smoke test, not a certification: passing it says nothing
about side information an adversary may hold.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, gammaincc

from .bits import as_bits
from .errors import DomainError

ALPHA_WARN = 0.01
ALPHA_FAIL = 0.001
BATTERY_MIN_BITS = 10**6
CSV_HEADER = ("test", "statistic", "p_value", "verdict01", "verdict001")


@dataclass(frozen=True)
class TestReport:
    name: str
    statistic: float
    p_value: float

    def __post_init__(self):
        p = min(1.0, max(0.0, float(self.p_value)))
        object.__setattr__(self, "p_value", p)

    def passed(self, alpha: float = ALPHA_WARN) -> bool:
        return self.p_value >= alpha

    def row(self) -> tuple:
        verdict = lambda a: "pass" if self.passed(a) else "fail"  # noqa: E731
        return (self.name, f"{self.statistic:.9g}", f"{self.p_value:.9g}", verdict(ALPHA_WARN), verdict(ALPHA_FAIL))


def _bits(bits, minimum: int, test: str) -> np.ndarray:
    b = as_bits(bits).ravel()
    if b.size < minimum:
        raise DomainError(f"{test} needs at least {minimum} bits, got {b.size}")
    return b


def monobit(bits) -> TestReport:
    """Frequency test: ``|S_n| / sqrt(n)`` of the +-1 sum, two-sided."""
    b = _bits(bits, 100, "monobit")
    s = 2 * int(b.sum()) - b.size
    stat = abs(s) / math.sqrt(b.size)
    return TestReport("monobit", stat, float(erfc(stat / math.sqrt(2))))


def runs_test(bits) -> TestReport:
    """Number of runs given the ones proportion (needs n >= 100).

    When the ones proportion already fails the frequency prerequisite
    ``|pi - 1/2| >= 2/sqrt(n)`` the p-value is reported as 0.
    """
    b = _bits(bits, 100, "runs")
    n = b.size
    pi = b.mean()
    if abs(pi - 0.5) >= 2 / math.sqrt(n):
        return TestReport("runs", float("nan"), 0.0)
    v = 1 + int(np.count_nonzero(b[1:] != b[:-1]))
    num = abs(v - 2 * n * pi * (1 - pi))
    den = 2 * math.sqrt(2 * n) * pi * (1 - pi)
    return TestReport("runs", float(v), float(erfc(num / den)))


def block_frequency(bits, block_len: int = 128) -> TestReport:
    """Chi-square of the ones proportion across ``n // block_len`` blocks (needs >= 20 blocks)."""
    if block_len < 20:
        raise DomainError("block length must be at least 20")
    b = _bits(bits, 20 * block_len, "block frequency")
    nblocks = b.size // block_len
    props = b[: nblocks * block_len].reshape(nblocks, block_len).mean(axis=1)
    chi2 = 4.0 * block_len * float(((props - 0.5) ** 2).sum())
    return TestReport("block_frequency", chi2, float(gammaincc(nblocks / 2, chi2 / 2)))


def chi_square_bytes(bits) -> TestReport:
    """Goodness of fit of byte values to uniform over 256 bins (>= 5 expected per bin)."""
    b = _bits(bits, 8 * 256 * 5, "byte chi-square")
    nbytes = b.size // 8
    values = np.packbits(b[: nbytes * 8], bitorder="little")
    observed = np.bincount(values, minlength=256)
    expected = nbytes / 256
    chi2 = float(((observed - expected) ** 2).sum() / expected)
    return TestReport("chi_square_bytes", chi2, float(gammaincc(255 / 2, chi2 / 2)))


@dataclass(frozen=True)
class BatteryResult:
    reports: tuple
    verdict: str  # "pass", "warn" or "fail"

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


def battery(bits, min_bits: int = BATTERY_MIN_BITS) -> BatteryResult:
    """All four tests; fails if any p < 0.001, warns if any p < 0.01."""
    b = _bits(bits, min_bits, "battery")
    reports = (monobit(b), runs_test(b), block_frequency(b), chi_square_bytes(b))
    worst = min(r.p_value for r in reports)
    verdict = "fail" if worst < ALPHA_FAIL else "warn" if worst < ALPHA_WARN else "pass"
    return BatteryResult(reports, verdict)


def reports_csv(reports, header_lines=()) -> str:
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in reports:
        w.writerow(r.row())
    return buf.getvalue()
