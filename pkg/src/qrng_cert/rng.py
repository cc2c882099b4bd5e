"""Pinned pseudo-randomness and the parallel Monte Carlo contract.

All simulation randomness comes from numpy's counter-based Philox4x64
generator seeded through a ``SeedSequence``. A Monte Carlo job with
``workers`` workers splits its repetitions into ``workers`` contiguous chunks;
chunk ``i`` draws from child stream ``i`` of the job seed. Results are
therefore reproducible for a fixed ``(seed, workers)`` pair, and the worker
count belongs in the reproducibility record.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, NamedTuple, Sequence

import numpy as np

PRNG_ID = f"numpy.Philox4x64/{np.__version__}"
WORKERS_ENV = "QRNG_CERT_WORKERS"


def make_rng(seed) -> np.random.Generator:
    """Philox generator from an int, a ``SeedSequence`` or an existing generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(int(seed))
    return np.random.Generator(np.random.Philox(seed))


def seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, np.random.Generator):
        ss = seed.bit_generator.seed_seq
        # draw a fresh child so repeated calls on one generator differ
        return ss.spawn(1)[0]
    return np.random.SeedSequence(int(seed))


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def split_reps(reps: int, workers: int) -> list[int]:
    workers = max(1, min(workers, reps)) if reps > 0 else 1
    base, extra = divmod(reps, workers)
    return [base + (i < extra) for i in range(workers)]


class Moments(NamedTuple):
    n: int
    mean: float
    m2: float

    @classmethod
    def of(cls, values) -> Moments:
        v = np.asarray(values, dtype=float)
        if v.size == 0:
            return cls(0, 0.0, 0.0)
        mu = float(v.mean())
        return cls(int(v.size), mu, float(((v - mu) ** 2).sum()))

    def merge(self, other: Moments) -> Moments:
        if self.n == 0:
            return other
        if other.n == 0:
            return self
        n = self.n + other.n
        delta = other.mean - self.mean
        mean = self.mean + delta * other.n / n
        m2 = self.m2 + other.m2 + delta * delta * self.n * other.n / n
        return Moments(n, mean, m2)

    @property
    def std(self) -> float:
        """Population standard deviation of the merged sample."""
        return math.sqrt(self.m2 / self.n) if self.n else float("nan")


def parallel_chunks(fn: Callable, seed, reps: int, workers: int, args: Sequence = ()) -> list:
    """Run ``fn(n_reps, seed_seq, *args)`` once per chunk, in chunk order."""
    sizes = split_reps(reps, workers)
    children = seed_sequence(seed).spawn(len(sizes))
    if len(sizes) == 1:
        return [fn(sizes[0], children[0], *args)]
    with ProcessPoolExecutor(max_workers=len(sizes)) as pool:
        futures = [pool.submit(fn, n, ss, *args) for n, ss in zip(sizes, children)]
        return [f.result() for f in futures]
