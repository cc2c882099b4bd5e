"""Tomographic min-entropy estimate for qubits, as a comparator to the UP bound.

Frame: Z (computational) generates the output, X (``|+>, |->``) and Y
(``(|0> +- i|1>)/sqrt 2``) are the tomography bases. The tomographic protocol
spends ``n* = ceil(sqrt(m)/2)`` measurements on each of X and Y, estimates
``r_x`` and ``r_y`` with the shrunk estimator ``(n_0 - n_1)/(n_0 + n_1 + 2)``
and certifies ``1 - log2(1 + sqrt(1 - r_x^2 - r_y^2))`` bits per Z outcome.
Its seed pays for choosing the ``2 n*`` tomography slots, twice.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import protocol
from .combinatorics import ceil_log2_binomial
from .errors import DimensionError, DomainError
from .quantum import BlochVector, bloch_to_density, density_to_bloch
from .rng import Moments, default_workers, make_rng, parallel_chunks
from .simulate import SourceModel

RESCALE_NORM = 1.0 - 1e-12
CSV_HEADER = ("m", "up_mean", "up_std", "tomo_mean", "tomo_std")


@dataclass(frozen=True)
class TomoSchedule:
    m: int
    n_x: int
    n_z: int
    seed_cost: int

    @property
    def n_y(self) -> int:
        return self.n_x


@dataclass(frozen=True)
class TomoCounts:
    n_0x: int
    n_1x: int
    n_0y: int
    n_1y: int

    def __post_init__(self):
        if min(self.n_0x, self.n_1x, self.n_0y, self.n_1y) < 0:
            raise DomainError("counts must be non-negative")


def fiorentino_bound(r_x, r_y):
    """Conditional min-entropy of Z from the equatorial Bloch components."""
    r_x, r_y = np.asarray(r_x, dtype=float), np.asarray(r_y, dtype=float)
    s = r_x * r_x + r_y * r_y
    if np.any(s > 1 + 1e-15):
        raise DomainError("r_x^2 + r_y^2 exceeds 1")
    out = 1.0 - np.log2(1.0 + np.sqrt(np.clip(1.0 - s, 0.0, None)))
    return float(out) if out.ndim == 0 else out


def up_bound_rx(r_x):
    r_x = np.asarray(r_x, dtype=float)
    if np.any(np.abs(r_x) > 1 + 1e-15):
        raise DomainError("|r_x| exceeds 1")
    out = 1.0 - np.log2(1.0 + np.sqrt(np.clip(1.0 - r_x * r_x, 0.0, None)))
    return float(out) if out.ndim == 0 else out


def estimate_r(n_0, n_1):
    n_0, n_1 = np.asarray(n_0), np.asarray(n_1)
    if np.any(n_0 < 0) or np.any(n_1 < 0):
        raise DomainError("counts must be non-negative")
    out = (n_0 - n_1) / (n_0 + n_1 + 2.0)
    return float(out) if out.ndim == 0 else out


def tomo_schedule(m: int) -> TomoSchedule:
    if m < 4:
        raise DomainError(f"tomographic schedule needs m >= 4, got {m}")
    n_star = _ceil_half_sqrt(m)
    return TomoSchedule(m, n_star, m - 2 * n_star, 2 * ceil_log2_binomial(m, 2 * n_star))


def _ceil_half_sqrt(m: int) -> int:
    """``ceil(sqrt(m) / 2)`` = smallest k with ``4 k^2 >= m``."""
    k = math.isqrt(m) // 2
    while 4 * k * k < m:
        k += 1
    return k


def tomo_seed_length(m: int) -> int:
    return tomo_schedule(m).seed_cost


def _rescaled_bound(rx: np.ndarray, ry: np.ndarray) -> np.ndarray:
    norm2 = rx * rx + ry * ry
    scale = np.where(norm2 > 1.0, RESCALE_NORM / np.sqrt(np.maximum(norm2, 1e-300)), 1.0)
    return fiorentino_bound(rx * scale, ry * scale)


def _tomo_rates(sched: TomoSchedule, n_0x, n_0y) -> np.ndarray:
    n = sched.n_x
    rx = estimate_r(n_0x, n - np.asarray(n_0x))
    ry = estimate_r(n_0y, n - np.asarray(n_0y))
    return (sched.n_z * _rescaled_bound(np.atleast_1d(rx), np.atleast_1d(ry)) - sched.seed_cost) / sched.m


def tomo_rate(m: int, counts: TomoCounts) -> float:
    sched = tomo_schedule(m)
    if counts.n_0x + counts.n_1x != sched.n_x or counts.n_0y + counts.n_1y != sched.n_y:
        raise DomainError(f"tomography counts must total n* = {sched.n_x} per basis")
    return float(_tomo_rates(sched, counts.n_0x, counts.n_0y)[0])


def comparison_source(pure: bool) -> SourceModel:
    """Qubit source of the finite-size comparison.

    Control-axis component ``r_x = 0.9947`` and generation-axis component
    ``r_z = 0.004``; ``r_y`` is either the residual that makes the state pure
    or zero (purity about 0.995).
    """
    r_x, r_z = 0.9947, 0.004
    r_y = math.sqrt(1.0 - r_x * r_x - r_z * r_z) if pure else 0.0
    rho = bloch_to_density(BlochVector(r_x, r_y, r_z))
    return SourceModel.from_state(rho, label="tomo-pure" if pure else "tomo-mixed")


def _bloch_of(model: SourceModel) -> BlochVector:
    if model.dim != 2:
        raise DimensionError("tomographic comparison is defined for qubits only")
    if model.rho is None:
        raise DomainError("comparison needs a model with a full density matrix")
    return density_to_bloch(model.rho)


def asymptotes(model: SourceModel) -> tuple[float, float]:
    """Infinite-m rates ``(up, tomo)`` for a qubit source."""
    r = _bloch_of(model)
    return up_bound_rx(r.r_x), fiorentino_bound(r.r_x, r.r_y)


class SweepRow(NamedTuple):
    m: int
    up_mean: float
    up_std: float
    tomo_mean: float
    tomo_std: float


def _compare_chunk(reps: int, seed_seq, m: int, r_x: float, r_y: float):
    rng = make_rng(seed_seq)
    n_x, _ = protocol.schedule_sizes(m)
    p_x = (1 + r_x) / 2
    n1 = rng.binomial(n_x, 1.0 - p_x, size=reps)
    up = protocol._rates(m, np.stack([n_x - n1, n1], axis=1), 1.0)
    sched = tomo_schedule(m)
    n0x = rng.binomial(sched.n_x, p_x, size=reps)
    n0y = rng.binomial(sched.n_y, (1 + r_y) / 2, size=reps)
    tomo = _tomo_rates(sched, n0x, n0y)
    return Moments.of(up), Moments.of(tomo)


def compare_sweep(model: SourceModel, m_grid, reps: int, rng=0, workers: int | None = None) -> list[SweepRow]:
    """Monte Carlo rates of both protocols on the same source, one row per ``m``."""
    r = _bloch_of(model)
    workers = default_workers() if workers is None else workers
    ss = np.random.SeedSequence(int(rng)) if not isinstance(rng, np.random.SeedSequence) else rng
    rows = []
    for m, child in zip(m_grid, ss.spawn(len(m_grid))):
        parts = parallel_chunks(_compare_chunk, child, reps, workers, (int(m), r.r_x, r.r_y))
        up, tomo = parts[0]
        for u, t in parts[1:]:
            up, tomo = up.merge(u), tomo.merge(t)
        rows.append(SweepRow(int(m), up.mean, up.std, tomo.mean, tomo.std))
    return rows


def sweep_csv(rows, header_lines=()) -> str:
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for row in rows:
        w.writerow([row.m] + [f"{v:.9g}" for v in row[1:]])
    return buf.getvalue()
