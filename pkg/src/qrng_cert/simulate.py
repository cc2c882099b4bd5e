"""Stochastic stand-in for the photonic source.

A :class:`SourceModel` carries the Born distributions of the control basis X
(``p_x``) and the generation basis Z (``p_z``). A run draws one uniform
variate per measurement slot, in slot order, and maps it through the
distribution of whichever basis the schedule assigns to that slot.

Run file layout (little-endian)::

    offset  size  field
    0       8     magic  b"QRNGRUN\\0"
    8       2     format version (u16, currently 1)
    10      2     dimension d (u16)
    12      4     header length H (u32)
    16      H     UTF-8 JSON header: label, prng, rng_seed, p_x, p_z,
                  tool_version, config_hash
    16+H    8     m (u64)
    ...     8     n_X (u64)
    ...     8*d   control counts (u64 each)
    ...     8*n_X control slot indices (u64 each, increasing)
    ...     8     n_Z (u64)
    ...     ...   Z outcomes, log2(d) bits each, LSB first
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bits import bits_per_outcome, bits_to_outcomes, outcomes_to_bits, pack_bits, unpack_bits
from .entropy import as_prob_vector
from .errors import DomainError, FormatError
from .protocol import Schedule, seed_to_schedule
from .quantum import (
    BlochVector,
    DensityMatrix,
    born_probabilities,
    bloch_to_density,
    computational_basis_povm,
    fourier_basis_povm,
)
from .rng import PRNG_ID, make_rng

RUN_MAGIC = b"QRNGRUN\x00"
RUN_VERSION = 1
_CHUNK = 1 << 22


@dataclass(frozen=True, eq=False)
class SourceModel:
    dim: int
    p_x: np.ndarray
    p_z: np.ndarray
    label: str = "custom"
    rho: DensityMatrix | None = None

    def __post_init__(self):
        p_x, p_z = as_prob_vector(self.p_x), as_prob_vector(self.p_z)
        if p_x.size != self.dim or p_z.size != self.dim:
            raise DomainError("Born vectors must have one entry per outcome")
        if self.rho is not None:
            if self.rho.dim != self.dim:
                raise DomainError("state dimension does not match the model")
            if not (
                np.allclose(born_probabilities(self.rho, fourier_basis_povm(self.dim)), p_x, atol=1e-9)
                and np.allclose(born_probabilities(self.rho, computational_basis_povm(self.dim)), p_z, atol=1e-9)
            ):
                raise DomainError("Born vectors are inconsistent with the state")
        object.__setattr__(self, "p_x", p_x)
        object.__setattr__(self, "p_z", p_z)

    @classmethod
    def from_state(cls, rho: DensityMatrix, label: str = "custom") -> SourceModel:
        p_x = born_probabilities(rho, fourier_basis_povm(rho.dim))
        p_z = born_probabilities(rho, computational_basis_povm(rho.dim))
        return cls(rho.dim, p_x, p_z, label, rho)

    def bloch(self) -> BlochVector:
        """Qubit completion of the two Born vectors with the unmeasured ``r_y = 0``."""
        if self.dim != 2:
            raise DomainError("Bloch reconstruction needs d = 2")
        if self.rho is not None:
            from .quantum import density_to_bloch

            return density_to_bloch(self.rho)
        return BlochVector(float(self.p_x[0] - self.p_x[1]), 0.0, float(self.p_z[0] - self.p_z[1]))

    def density(self) -> DensityMatrix:
        if self.rho is not None:
            return self.rho
        return bloch_to_density(self.bloch())


def qubit_experiment_model() -> SourceModel:
    return SourceModel(2, np.array([0.9973, 0.0027]), np.array([0.5020, 0.4980]), "qubit")


def ququart_experiment_model() -> SourceModel:
    p = [0.9937, 0.00359, 0.00266]
    p.append(1.0 - sum(p))
    return SourceModel(4, np.array(p), np.array([0.2527, 0.2412, 0.2608, 0.2453]), "ququart")


def maximally_mixed_model(d: int = 2) -> SourceModel:
    return SourceModel.from_state(DensityMatrix.maximally_mixed(d), label=f"mixed{d}")


def sample_counts(p, n: int, rng) -> np.ndarray:
    p = as_prob_vector(p)
    if n < 0:
        raise DomainError("sample size must be non-negative")
    return make_rng(rng).multinomial(n, p)


@dataclass(frozen=True, eq=False)
class RunRecord:
    schedule: Schedule
    z_outcomes: np.ndarray
    x_counts: np.ndarray
    rng_seed: int
    label: str
    dim: int
    prng: str = PRNG_ID
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        z = np.asarray(self.z_outcomes, dtype=np.uint8)
        xc = np.asarray(self.x_counts, dtype=np.int64)
        if z.size != self.schedule.n_z:
            raise DomainError("Z outcome count does not match the schedule")
        if xc.size != self.dim or int(xc.sum()) != self.schedule.n_x:
            raise DomainError("control counts do not match the schedule")
        if z.size and z.max() >= self.dim:
            raise DomainError("Z outcome out of range")
        object.__setattr__(self, "z_outcomes", z)
        object.__setattr__(self, "x_counts", xc)

    @property
    def m(self) -> int:
        return self.schedule.m

    def __eq__(self, other):
        return (
            isinstance(other, RunRecord)
            and self.schedule == other.schedule
            and np.array_equal(self.z_outcomes, other.z_outcomes)
            and np.array_equal(self.x_counts, other.x_counts)
            and (self.rng_seed, self.label, self.dim, self.prng)
            == (other.rng_seed, other.label, other.dim, other.prng)
        )


def _draw(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    out = np.searchsorted(cdf, u, side="right")
    return np.minimum(out, cdf.size - 1).astype(np.uint8)


def sample_run(model: SourceModel, m: int, seed_bits, rng_seed: int) -> RunRecord:
    """Simulate ``m`` measurements with control slots chosen by ``seed_bits``."""
    schedule, _ = seed_to_schedule(seed_bits, m)
    rng = make_rng(rng_seed)
    is_x = np.zeros(m, dtype=bool)
    is_x[schedule.x_positions] = True
    cdf_x, cdf_z = np.cumsum(model.p_x), np.cumsum(model.p_z)
    z_parts = []
    x_counts = np.zeros(model.dim, dtype=np.int64)
    for start in range(0, m, _CHUNK):
        u = rng.random(min(_CHUNK, m - start))
        mask = is_x[start : start + u.size]
        z_parts.append(_draw(cdf_z, u[~mask]))
        x_counts += np.bincount(_draw(cdf_x, u[mask]), minlength=model.dim)
    z = np.concatenate(z_parts) if z_parts else np.zeros(0, dtype=np.uint8)
    return RunRecord(schedule, z, x_counts, int(rng_seed), model.label, model.dim)


def write_run(path, run: RunRecord, p_x=None, p_z=None) -> None:
    header = {
        "label": run.label,
        "prng": run.prng,
        "rng_seed": run.rng_seed,
        "tool_version": __version__,
        **run.meta,
    }
    if p_x is not None:
        header["p_x"] = [float(v) for v in p_x]
    if p_z is not None:
        header["p_z"] = [float(v) for v in p_z]
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    sched = run.schedule
    with open(path, "wb") as fh:
        fh.write(RUN_MAGIC + struct.pack("<HHI", RUN_VERSION, run.dim, len(blob)))
        fh.write(blob)
        fh.write(struct.pack("<QQ", sched.m, sched.n_x))
        fh.write(run.x_counts.astype("<u8").tobytes())
        fh.write(sched.x_positions.astype("<u8").tobytes())
        fh.write(struct.pack("<Q", sched.n_z))
        fh.write(pack_bits(outcomes_to_bits(run.z_outcomes, run.dim)))


def read_run(path) -> RunRecord:
    blob = Path(path).read_bytes()
    if len(blob) < 16 or blob[:8] != RUN_MAGIC:
        raise FormatError(f"{path}: not a run file")
    version, d, hlen = struct.unpack_from("<HHI", blob, 8)
    if version != RUN_VERSION:
        raise FormatError(f"{path}: unsupported run file version {version}")
    try:
        header = json.loads(blob[16 : 16 + hlen].decode("utf-8"))
        off = 16 + hlen
        m, n_x = struct.unpack_from("<QQ", blob, off)
        off += 16
        counts = np.frombuffer(blob, "<u8", d, off).astype(np.int64)
        off += 8 * d
        positions = np.frombuffer(blob, "<u8", n_x, off).astype(np.int64)
        off += 8 * n_x
        (n_z,) = struct.unpack_from("<Q", blob, off)
        off += 8
        nbits = n_z * bits_per_outcome(d)
        if len(blob) - off != (nbits + 7) // 8:
            raise FormatError(f"{path}: payload size mismatch")
        z = bits_to_outcomes(unpack_bits(blob[off:], nbits), d)
        meta = {k: v for k, v in header.items() if k not in ("label", "prng", "rng_seed")}
        return RunRecord(
            Schedule(int(m), positions),
            z,
            counts,
            int(header["rng_seed"]),
            header["label"],
            d,
            header["prng"],
            meta,
        )
    except (ValueError, KeyError, struct.error) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"{path}: corrupt run file ({exc})") from exc


def z_min_entropy(run: RunRecord) -> float:
    """Plug-in classical min-entropy of the generated Z sequence."""
    freq = np.bincount(run.z_outcomes, minlength=run.dim) / max(run.schedule.n_z, 1)
    return float(-math.log2(freq.max()))
