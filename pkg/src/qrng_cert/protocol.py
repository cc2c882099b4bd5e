"""Measurement scheduling, seed accounting and the certified bit budget.

Out of ``m`` measurements, ``n_X = ceil(sqrt(m))`` go to the control basis and
the rest to the generation basis. Choosing the control slots costs
``t(m) = ceil(log2 C(m, n_X))`` seed bits. With ``H~`` the Bayesian estimate of
the control outcomes' order-1/2 Renyi entropy, a run certifies

    b_sec = (m - n_X) (q - H~) - t(m)

bits, i.e. a rate of ``b_sec / m`` bits per measurement. Negative budgets are
reported as they are; nothing here clamps them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln, poch

from . import entropy, kernels
from .combinatorics import ceil_log2_binomial, rank_combination, unrank_combination
from .errors import BudgetError, DomainError, FormatError, InsufficientSeedError
from .rng import Moments, default_workers, make_rng, parallel_chunks

__all__ = [
    "Schedule",
    "Certificate",
    "RateSummary",
    "schedule_sizes",
    "seed_length",
    "unrank_combination",
    "rank_combination",
    "seed_to_schedule",
    "certified_bits",
    "certify",
    "single_shot_rate_qubit",
    "error_distribution",
    "expected_rate",
    "asymptotic_rate",
    "min_m_positive",
]

COMPOSITION_BUDGET = 10**6
CERTIFICATE_FORMAT = "qrng-cert-certificate/1"


def control_size(m: int) -> int:
    """``ceil(sqrt(m))`` without floating point."""
    r = math.isqrt(m)
    return r if r * r == m else r + 1


def schedule_sizes(m: int) -> tuple[int, int]:
    if m < 2:
        raise DomainError(f"need at least 2 measurements, got m={m}")
    n_x = control_size(m)
    return n_x, m - n_x


def seed_length(m: int) -> int:
    """Seed bits ``t(m)`` needed to pick the control slots."""
    n_x, _ = schedule_sizes(m)
    return ceil_log2_binomial(m, n_x)


@dataclass(frozen=True, eq=False)
class Schedule:
    m: int
    x_positions: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.x_positions, dtype=np.int64)
        n_x, _ = schedule_sizes(self.m)
        if pos.shape != (n_x,):
            raise DomainError(f"schedule needs exactly {n_x} control slots")
        if n_x and (pos[0] < 0 or pos[-1] >= self.m or np.any(np.diff(pos) <= 0)):
            raise DomainError("control slots must be strictly increasing indices in [0, m)")
        pos.setflags(write=False)
        object.__setattr__(self, "x_positions", pos)

    @property
    def n_x(self) -> int:
        return int(self.x_positions.size)

    @property
    def n_z(self) -> int:
        return self.m - self.n_x

    def __eq__(self, other):
        return (
            isinstance(other, Schedule)
            and self.m == other.m
            and np.array_equal(self.x_positions, other.x_positions)
        )


def _bits_to_int(block) -> int:
    """Big-endian reading of a block of bits (first bit is most significant)."""
    value = 0
    for b in block:
        value = (value << 1) | int(b)
    return value


def seed_to_schedule(seed_bits, m: int) -> tuple[Schedule, int]:
    """Turn uniform seed bits into a uniformly random schedule by rejection sampling.

    Reads consecutive ``t(m)``-bit blocks (most significant bit first) until one
    is below ``C(m, n_X)``, unranks it and reports how many bits were read.
    """
    n_x, _ = schedule_sizes(m)
    t = seed_length(m)
    total = math.comb(m, n_x)
    bits = np.asarray(seed_bits, dtype=np.uint8)
    if bits.size < t:
        raise InsufficientSeedError(f"schedule needs at least {t} seed bits, got {bits.size}")
    used = 0
    while used + t <= bits.size:
        value = int.from_bytes(np.packbits(bits[used : used + t]).tobytes(), "big") >> (-t % 8)
        used += t
        if value < total:
            return Schedule(m, np.array(unrank_combination(value, m, n_x))), used
    raise InsufficientSeedError(f"seed exhausted after {used} bits without an accepted block")


@dataclass(frozen=True)
class Certificate:
    """Certified outcome of one run; serializes to ``key: value`` lines."""

    m: int
    n_x: int
    q: float
    h_half_estimate: float
    seed_cost: int
    counts: tuple = field(default=())
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def min_entropy_bound(self) -> float:
        return self.q - self.h_half_estimate

    @property
    def b_sec(self) -> float:
        return (self.m - self.n_x) * self.min_entropy_bound - self.seed_cost

    @property
    def rate(self) -> float:
        return self.b_sec / self.m

    @property
    def certifies_anything(self) -> bool:
        return self.b_sec > 0

    def to_text(self) -> str:
        lines = [f"# {CERTIFICATE_FORMAT}", f"format: {CERTIFICATE_FORMAT}"]
        for key, value in sorted(self.meta.items()):
            lines.append(f"{key}: {value}")
        lines += [
            f"m: {self.m}",
            f"n_X: {self.n_x}",
            f"q: {self.q!r}",
            f"counts: {' '.join(str(c) for c in self.counts)}",
            f"h_half_estimate: {self.h_half_estimate!r}",
            f"min_entropy_bound: {self.min_entropy_bound!r}",
            f"seed_cost: {self.seed_cost}",
            f"b_sec: {self.b_sec!r}",
            f"rate: {self.rate!r}",
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> Certificate:
        fields = {}
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition(":")
            if not sep:
                raise FormatError(f"certificate line without ':' -> {raw!r}")
            fields[key.strip()] = value.strip()
        if fields.pop("format", None) != CERTIFICATE_FORMAT:
            raise FormatError("not a certificate (format line missing or unknown)")
        try:
            counts = tuple(int(c) for c in fields.pop("counts").split())
            cert = cls(
                m=int(fields.pop("m")),
                n_x=int(fields.pop("n_X")),
                q=float(fields.pop("q")),
                h_half_estimate=float(fields.pop("h_half_estimate")),
                seed_cost=int(fields.pop("seed_cost")),
                counts=counts,
                meta={k: fields.pop(k) for k in list(fields) if k not in _DERIVED},
            )
            derived = {k: float(fields[k]) for k in _DERIVED}
        except (KeyError, ValueError) as exc:
            raise FormatError(f"certificate missing or malformed field: {exc}") from exc
        for key, value in derived.items():
            if not math.isclose(value, getattr(cert, key), rel_tol=1e-12, abs_tol=1e-9):
                raise FormatError(f"certificate field {key} disagrees with its inputs")
        return cert


_DERIVED = ("min_entropy_bound", "b_sec", "rate")


def certified_bits(m: int, h_half: float, q: float) -> float:
    """``b_sec`` for a given entropy estimate (no clamping)."""
    n_x, n_z = schedule_sizes(m)
    return n_z * (q - h_half) - seed_length(m)


def certify(m: int, counts, q: float, meta: dict | None = None) -> Certificate:
    n = entropy.as_counts(counts)
    if n.ndim != 1:
        raise DomainError("certify takes one count vector")
    n_x, _ = schedule_sizes(m)
    if int(n.sum()) != n_x:
        raise DomainError(f"control counts total {int(n.sum())}, schedule has n_X={n_x}")
    if q <= 0:
        raise DomainError("incompatibility q must be positive")
    return Certificate(
        m=m,
        n_x=n_x,
        q=float(q),
        h_half_estimate=entropy.bayesian_h_half(n),
        seed_cost=seed_length(m),
        counts=tuple(int(c) for c in n),
        meta=dict(meta or {}),
    )


def single_shot_rate_qubit(n_1: int, m: int) -> float:
    """Qubit rate with ``n_1`` errors among the ``n_X`` control outcomes (q = 1)."""
    n_x, n_z = schedule_sizes(m)
    if not (0 <= n_1 <= n_x):
        raise DomainError(f"n_1 must lie in [0, {n_x}]")
    n_0 = n_x - n_1
    # Gamma ratios as Pochhammer symbols (x)_{1/2}; log-Gamma differences cancel badly here
    tail = float(poch(n_0 + 1, 0.5) + poch(n_1 + 1, 0.5)) / float(poch(n_x + 2, 0.5))
    bits = n_z * (1 - 2 * math.log2(tail)) - ceil_log2_binomial(m, n_x)
    return bits / m


def error_distribution(n_x: int, p) -> np.ndarray:
    """Binomial law of the number of 1-outcomes among ``n_x`` control measurements."""
    p = entropy.as_prob_vector(p)
    if p.size != 2:
        raise DomainError("error distribution is defined for qubits")
    k = np.arange(n_x + 1)
    log_c = gammaln(n_x + 1) - gammaln(k + 1) - gammaln(n_x - k + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        logw = log_c + _xlogy(n_x - k, p[0]) + _xlogy(k, p[1])
    return np.exp(logw)


def _xlogy(n, p):
    """``n * log p`` with ``0 * log 0 = 0``."""
    n = np.asarray(n, dtype=float)
    if p == 0:
        return np.where(n == 0, 0.0, -np.inf)
    return n * math.log(p)


class RateSummary(NamedTuple):
    mean: float
    std: float
    n: int


def _rates(m: int, counts: np.ndarray, q: float) -> np.ndarray:
    n_x, n_z = schedule_sizes(m)
    h = entropy.bayesian_h_half(np.atleast_2d(counts))
    return (n_z * (q - h) - seed_length(m)) / m


def multinomial_log_weights(counts: np.ndarray, p: np.ndarray) -> np.ndarray:
    n = counts.sum(axis=1)
    logw = gammaln(n + 1) - gammaln(counts + 1).sum(axis=1)
    for j, pj in enumerate(p):
        logw = logw + _xlogy(counts[:, j], pj)
    return logw


def _mc_chunk(reps: int, seed_seq, m: int, p: np.ndarray, q: float) -> Moments:
    rng = make_rng(seed_seq)
    n_x, _ = schedule_sizes(m)
    counts = rng.multinomial(n_x, p, size=reps)
    return Moments.of(_rates(m, counts, q))


def expected_rate(
    m: int,
    p,
    q: float,
    mode: str = "exact",
    reps: int = 10_000,
    rng=0,
    workers: int | None = None,
) -> RateSummary:
    """Mean and standard deviation of the certified rate over ``Multinomial(n_X, p)``.

    ``mode="exact"`` enumerates every composition of ``n_X`` (refused above
    ``10**6`` compositions); ``mode="montecarlo"`` samples ``reps`` count
    vectors and reports the sample mean and (population) standard deviation.
    """
    p = entropy.as_prob_vector(p)
    n_x, _ = schedule_sizes(m)
    if mode == "exact":
        size = math.comb(n_x + p.size - 1, p.size - 1)
        if size > COMPOSITION_BUDGET:
            raise BudgetError(f"{size} compositions exceed the exact budget; use mode='montecarlo'")
        comps = kernels.compositions(n_x, p.size)
        w = np.exp(multinomial_log_weights(comps, p))
        keep = w > 0
        w = w[keep] / w[keep].sum()
        r = _rates(m, comps[keep], q)
        mean = float(np.dot(w, r))
        var = float(np.dot(w, (r - mean) ** 2))
        return RateSummary(mean, math.sqrt(var), size)
    if mode == "montecarlo":
        workers = default_workers() if workers is None else workers
        parts = parallel_chunks(_mc_chunk, rng, reps, workers, (m, p, q))
        total = parts[0]
        for part in parts[1:]:
            total = total.merge(part)
        return RateSummary(total.mean, total.std, total.n)
    raise ValueError(f"unknown mode {mode!r}")


def asymptotic_rate(p, q: float) -> float:
    return q - entropy.max_entropy_half(p)


def min_m_positive(p, q: float, m_max: int = 100_000) -> int:
    """Smallest ``m`` whose exact expected rate is positive."""
    if asymptotic_rate(p, q) <= 0:
        raise DomainError("asymptotic rate is not positive; no m certifies on average")
    for m in range(2, m_max + 1):
        if expected_rate(m, p, q, mode="exact").mean > 0:
            return m
    raise DomainError(f"no positive expected rate up to m={m_max}")
