"""Toeplitz two-universal hashing of the raw generation sequence.

A seed ``s`` of ``n + ell - 1`` bits defines the ``ell x n`` binary Toeplitz
matrix ``T[i, j] = s[i - j + n - 1]``; the hash of an ``n``-bit input ``x`` is
``T x`` over GF(2). Equivalently, output bit ``i`` is entry ``i + n - 1`` of
the integer convolution ``s * x``, reduced mod 2.

Two evaluation routes are provided and must agree bit for bit:

* ``direct``: word-parallel row parities (compiled kernel when available),
  cost ``O(ell * n / 64)``;
* ``fft``: blockwise float64 FFT convolution with exact rounding, memory
  ``O(n + ell)`` and cost ``O((n + ell) log B * (n + ell) / B)`` for block
  size ``B``.
"""

from __future__ import annotations

import math

import numpy as np

from . import kernels
from .bits import as_bits, outcomes_to_bits, pack_words
from .errors import DomainError, ExtractionRefused
from .protocol import Certificate
from .simulate import RunRecord

DIRECT_LIMIT = 1 << 26  # ell * n below which the direct route is used
MAX_BLOCK = 1 << 20


def output_length(certified_bits: float, epsilon_exponent: int = 0) -> int:
    """Hash output length ``max(0, floor(b_sec - 2 * epsilon_exponent))``."""
    if epsilon_exponent < 0:
        raise DomainError("epsilon exponent must be non-negative")
    return max(0, math.floor(certified_bits - 2 * epsilon_exponent))


def toeplitz_seed_length(n: int, ell: int) -> int:
    return n + ell - 1


def _check(n: int, ell: int, seed: np.ndarray):
    if ell < 0 or ell > n:
        raise DomainError(f"output length {ell} must lie in [0, n={n}]")
    if ell and seed.size != n + ell - 1:
        raise DomainError(f"Toeplitz seed must have n + ell - 1 = {n + ell - 1} bits, got {seed.size}")


def toeplitz_hash(bits, ell: int, seed, method: str = "auto") -> np.ndarray:
    """Hash ``bits`` (shape ``(n,)`` or a batch ``(k, n)``) to ``ell`` bits."""
    x = as_bits(bits)
    s = as_bits(seed)
    n = x.shape[-1]
    _check(n, ell, s)
    if ell == 0:
        return np.zeros(x.shape[:-1] + (0,), dtype=np.uint8)
    if method == "auto":
        method = "direct" if ell * n <= DIRECT_LIMIT and x.ndim == 1 else "fft"
    if method == "direct":
        if x.ndim == 1:
            return _direct(x, ell, s)
        return np.stack([_direct(row, ell, s) for row in x])
    if method == "fft":
        return _fft(x, ell, s)
    raise ValueError(f"unknown method {method!r}")


def _direct(x: np.ndarray, ell: int, s: np.ndarray) -> np.ndarray:
    n = x.size
    xrev = pack_words(x[::-1])
    nw = xrev.size
    need = ((ell - 1) >> 6) + nw + 1
    seed_words = np.zeros(need, dtype=np.uint64)
    sw = pack_words(s)
    seed_words[: sw.size] = sw
    return kernels.toeplitz_direct(seed_words, xrev, ell)


def _fft(x: np.ndarray, ell: int, s: np.ndarray) -> np.ndarray:
    n = x.shape[-1]
    block = min(MAX_BLOCK, 1 << max(1, (max(n, ell) - 1).bit_length()))
    size = 1 << (2 * block - 1).bit_length()  # holds a (2B-1) * B linear convolution
    lead = x.shape[:-1]
    out = np.zeros(lead + (ell,), dtype=np.uint8)
    sf = s.astype(np.float64)
    for j0 in range(0, n, block):
        xb = x[..., j0 : j0 + block].astype(np.float64)
        xf = np.fft.rfft(xb, size)
        for i0 in range(0, ell, block):
            rows = min(block, ell - i0)
            # window w[k] = s[i0 - j0 - B + 1 + n - 1 + k], k in [0, 2B-1)
            base = i0 - j0 - block + n
            lo, hi = max(base, 0), min(base + 2 * block - 1, sf.size)
            w = np.zeros(2 * block - 1)
            if hi > lo:
                w[lo - base : hi - base] = sf[lo:hi]
            conv = np.fft.irfft(np.fft.rfft(w, size) * xf, size)[..., block - 1 : block - 1 + rows]
            rounded = np.rint(conv)
            if np.abs(conv - rounded).max(initial=0.0) > 0.25:
                raise ArithmeticError("FFT convolution lost integer exactness")
            out[..., i0 : i0 + rows] ^= (rounded.astype(np.int64) & 1).astype(np.uint8)
    return out


def run_input_bits(run: RunRecord) -> np.ndarray:
    return outcomes_to_bits(run.z_outcomes, run.dim)


def extract_run(run: RunRecord, cert: Certificate, extractor_seed, epsilon_exponent: int = 0) -> np.ndarray:
    """Hash a run's Z sequence down to the certified number of bits."""
    if cert.m != run.m or cert.n_x != run.schedule.n_x:
        raise DomainError("certificate and run disagree on m or n_X")
    if cert.counts and tuple(cert.counts) != tuple(int(c) for c in run.x_counts):
        raise DomainError("certificate control counts differ from the run's")
    if cert.b_sec <= 0:
        raise ExtractionRefused(f"certificate certifies nothing (b_sec = {cert.b_sec:.3f})")
    x = run_input_bits(run)
    ell = min(output_length(cert.b_sec, epsilon_exponent), x.size)
    if ell == 0:
        raise ExtractionRefused("security discount leaves no output bits")
    seed = as_bits(extractor_seed)
    if seed.size < x.size + ell - 1:
        raise DomainError(f"extractor seed needs {x.size + ell - 1} bits, got {seed.size}")
    return toeplitz_hash(x, ell, seed[: x.size + ell - 1])
