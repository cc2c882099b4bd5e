"""Fast invariant checks run by ``qrng-cert selftest``.

Each check calls through module attributes (``entropy.bayesian_h_half`` and
so on) so a broken or patched implementation is seen by the check.
"""

from __future__ import annotations

import itertools
import math
import time
from typing import Callable, NamedTuple

import numpy as np

from . import combinatorics, entropy, extract, quantum
from .rng import make_rng

# H~ of zero counts for d = 2: 2 log2(2 * Gamma(3/2) Gamma(2) / Gamma(5/2)) = 2 log2(4/3)
UNIFORM_PRIOR_FIXTURE = 2 * math.log2(4 / 3)


class CheckResult(NamedTuple):
    name: str
    ok: bool
    detail: str
    seconds: float


def check_mub_overlaps() -> str:
    for d in (2, 3, 4, 8, 16):
        c, q = quantum.overlap_c(quantum.computational_basis_povm(d), quantum.fourier_basis_povm(d))
        if abs(c - 1 / d) > 1e-12 or abs(q - math.log2(d)) > 1e-12:
            raise AssertionError(f"d={d}: c={c!r}, q={q!r}")
    return "d in 2,3,4,8,16"


def check_uniform_prior_fixture() -> str:
    value = entropy.bayesian_h_half(np.array([0, 0]))
    if abs(value - UNIFORM_PRIOR_FIXTURE) > 1e-6:
        raise AssertionError(f"H~(0,0) = {value!r}, expected {UNIFORM_PRIOR_FIXTURE:.6f}")
    return f"H~(0,0) = {value:.6f}"


def check_estimator_smoke() -> str:
    p = np.array([0.9973, 0.0027])
    truth = entropy.max_entropy_half(p)
    counts = make_rng(20240101).multinomial(100_000, p, size=20)
    err = np.abs(np.asarray(entropy.bayesian_h_half(counts)) - truth)
    if err.max() > 0.02:
        raise AssertionError(f"Bayesian estimate off by {err.max():.4f} at n=1e5")
    return f"max |H~ - H| = {err.max():.4f} over 20 draws"


def check_extractor_exhaustive(n_max: int = 8, ell_max: int = 3) -> str:
    pairs = 0
    for n in range(1, n_max + 1):
        inputs = np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.uint8)
        for ell in range(1, min(ell_max, n) + 1):
            seeds = np.array(list(itertools.product((0, 1), repeat=n + ell - 1)), dtype=np.uint8)
            codes = np.empty((seeds.shape[0], inputs.shape[0]), dtype=np.int64)
            weights = 1 << np.arange(ell)
            for k, s in enumerate(seeds):
                codes[k] = extract.toeplitz_hash(inputs, ell, s, method="fft") @ weights
            collide = np.zeros((inputs.shape[0],) * 2, dtype=np.int64)
            for row in codes:
                collide += row[:, None] == row[None, :]
            np.fill_diagonal(collide, 0)
            if collide.max() * (1 << ell) > seeds.shape[0]:
                raise AssertionError(f"n={n}, ell={ell}: collision fraction above 2^-ell")
            pairs += inputs.shape[0] * (inputs.shape[0] - 1) // 2
    return f"{pairs} input pairs, n <= {n_max}, ell <= {ell_max}"


def check_unrank_bijection(m_max: int = 10) -> str:
    total = 0
    for m in range(1, m_max + 1):
        for k in range(m + 1):
            seen = set()
            for idx in range(math.comb(m, k)):
                pos = combinatorics.unrank_combination(idx, m, k)
                if combinatorics.rank_combination(pos, m) != idx:
                    raise AssertionError(f"rank(unrank({idx})) != {idx} for m={m}, k={k}")
                seen.add(tuple(pos))
            if len(seen) != math.comb(m, k):
                raise AssertionError(f"unrank is not injective for m={m}, k={k}")
            total += len(seen)
    return f"{total} subsets, m <= {m_max}"


CHECKS: tuple[tuple[str, Callable[[], str]], ...] = (
    ("mub_overlaps", check_mub_overlaps),
    ("uniform_prior_fixture", check_uniform_prior_fixture),
    ("estimator_smoke", check_estimator_smoke),
    ("extractor_exhaustive", check_extractor_exhaustive),
    ("unrank_bijection", check_unrank_bijection),
)


def run_all() -> list[CheckResult]:
    results = []
    for name, fn in CHECKS:
        t0 = time.perf_counter()
        try:
            detail, ok = fn(), True
        except Exception as exc:  # noqa: BLE001 - every failure is reported, none aborts the run
            detail, ok = f"{type(exc).__name__}: {exc}", False
        results.append(CheckResult(name, ok, detail, time.perf_counter() - t0))
    return results
