"""Finite-dimensional states, measurements and overlap constants.

Conventions: the generation basis Z is the computational basis, the control
basis X is its discrete Fourier transform with ``omega = exp(2 pi i / d)``.
For qubits this makes X the Pauli-x (``|+>, |->``) basis and Y the Pauli-y
basis used by tomography.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError, DomainError

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
COMPLETENESS_TOL = 1e-10

PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def _min_eig(a: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(a).min())


def psd_sqrt(a: np.ndarray) -> np.ndarray:
    """Square root of a PSD matrix via eigendecomposition with clamping."""
    a = np.asarray(a, dtype=complex)
    w, v = np.linalg.eigh((a + a.conj().T) / 2)
    if w.min() < -PSD_TOL:
        raise DomainError(f"matrix is not positive semidefinite (min eigenvalue {w.min():.3g})")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A d x d Hermitian, unit-trace, positive semidefinite matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise DimensionError(f"density matrix must be square, got shape {m.shape}")
        if np.abs(m - m.conj().T).max() > HERMITIAN_TOL:
            raise DomainError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1) > TRACE_TOL:
            raise DomainError(f"density matrix trace is {np.trace(m).real:.15g}, not 1")
        if _min_eig(m) < -PSD_TOL:
            raise DomainError("density matrix has a negative eigenvalue")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_pure(cls, vec) -> DensityMatrix:
        v = np.asarray(vec, dtype=complex).ravel()
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))

    @classmethod
    def maximally_mixed(cls, d: int) -> DensityMatrix:
        return cls(np.eye(d, dtype=complex) / d)

    @classmethod
    def random(cls, d: int, rng, rank: int | None = None) -> DensityMatrix:
        """Random state from a complex Ginibre matrix of the given rank."""
        rank = d if rank is None else rank
        g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
        rho = g @ g.conj().T
        rho = (rho + rho.conj().T) / 2
        return cls(rho / np.trace(rho).real)


@dataclass(frozen=True, eq=False)
class Povm:
    """An ordered list of PSD operators summing to the identity."""

    elements: tuple

    def __post_init__(self):
        els = tuple(np.array(e, dtype=complex) for e in self.elements)
        if not els:
            raise DimensionError("POVM needs at least one element")
        d = els[0].shape[0]
        for e in els:
            if e.shape != (d, d):
                raise DimensionError("POVM elements must share one square shape")
            if _min_eig((e + e.conj().T) / 2) < -PSD_TOL:
                raise DomainError("POVM element is not positive semidefinite")
            e.setflags(write=False)
        if np.abs(sum(els) - np.eye(d)).max() > COMPLETENESS_TOL:
            raise DomainError("POVM elements do not sum to the identity")
        object.__setattr__(self, "elements", els)

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    def __len__(self):
        return len(self.elements)

    @classmethod
    def from_basis(cls, vectors: Sequence) -> Povm:
        """Rank-1 projectors onto the given (column) vectors."""
        return cls(tuple(np.outer(v, np.conj(v)) for v in vectors))


@dataclass(frozen=True)
class BlochVector:
    r_x: float
    r_y: float
    r_z: float

    def __post_init__(self):
        if self.r_x**2 + self.r_y**2 + self.r_z**2 > 1 + 1e-12:
            raise DomainError("Bloch vector longer than 1")

    @property
    def norm(self) -> float:
        return math.sqrt(self.r_x**2 + self.r_y**2 + self.r_z**2)


@dataclass(frozen=True, eq=False)
class CqState:
    """Classical outcomes with probabilities and the side system's conditional states."""

    probs: tuple
    states: tuple

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        states = tuple(s if isinstance(s, DensityMatrix) else DensityMatrix(s) for s in self.states)
        if len(probs) != len(states):
            raise DimensionError("one side state per outcome required")
        if any(p < 0 or p > 1 for p in probs) or abs(sum(probs) - 1) > 1e-12:
            raise DomainError("outcome probabilities must form a distribution")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "states", states)


def _check_dim(d: int) -> int:
    if int(d) != d or d < 2:
        raise DimensionError(f"dimension must be an integer >= 2, got {d}")
    return int(d)


def computational_basis_povm(d: int) -> Povm:
    d = _check_dim(d)
    return Povm.from_basis(np.eye(d, dtype=complex))


def fourier_vectors(d: int) -> np.ndarray:
    """Rows are ``|x> = d^-1/2 sum_z omega^{xz} |z>``."""
    d = _check_dim(d)
    xz = np.outer(np.arange(d), np.arange(d))
    return np.exp(2j * np.pi * xz / d) / math.sqrt(d)


def fourier_basis_povm(d: int) -> Povm:
    return Povm.from_basis(fourier_vectors(d))


def pauli_y_basis_povm() -> Povm:
    s = 1 / math.sqrt(2)
    return Povm.from_basis([np.array([s, 1j * s]), np.array([s, -1j * s])])


def born_probabilities(rho: DensityMatrix, povm: Povm) -> np.ndarray:
    """Outcome distribution ``p_x = Tr[N_x rho]``, clamped and renormalized."""
    if rho.dim != povm.dim:
        raise DimensionError(f"state dimension {rho.dim} != POVM dimension {povm.dim}")
    p = np.array([np.trace(e @ rho.matrix) for e in povm.elements])
    if np.abs(p.imag).max() > 1e-10:
        raise DomainError("Born probabilities have an imaginary part")
    p = np.clip(p.real, 0.0, 1.0)
    return p / p.sum()


def overlap_c(povm_a: Povm, povm_b: Povm) -> tuple[float, float]:
    """Maximum overlap ``c`` between two POVMs and the incompatibility ``q = log2(1/c)``."""
    if povm_a.dim != povm_b.dim:
        raise DimensionError("POVMs act on different dimensions")
    roots_a = [psd_sqrt(m) for m in povm_a.elements]
    roots_b = [psd_sqrt(n) for n in povm_b.elements]
    c = 0.0
    for ra in roots_a:
        for rb in roots_b:
            c = max(c, float(np.linalg.svd(ra @ rb, compute_uv=False)[0] ** 2))
    if c <= 0:
        raise DomainError("POVMs have zero overlap")
    return c, math.log2(1.0 / c)


def density_to_bloch(rho: DensityMatrix) -> BlochVector:
    if rho.dim != 2:
        raise DimensionError("Bloch vectors are defined for qubits only")
    r = [float(np.trace(rho.matrix @ s).real) for s in PAULI]
    return BlochVector(*r)


def bloch_to_density(r: BlochVector) -> DensityMatrix:
    m = 0.5 * (np.eye(2) + r.r_x * PAULI[0] + r.r_y * PAULI[1] + r.r_z * PAULI[2])
    return DensityMatrix(m)


def purity(rho: DensityMatrix) -> float:
    return float(np.trace(rho.matrix @ rho.matrix).real)


def bloch_y_bound(r_z: float, r_x: float) -> float:
    """Largest ``|r_y|`` compatible with the given in-plane components."""
    s = r_z * r_z + r_x * r_x
    if s > 1 + 1e-15:
        raise DomainError(f"r_z^2 + r_x^2 = {s} exceeds 1")
    return math.sqrt(max(0.0, 1.0 - s))


def trace_norm(a: np.ndarray) -> float:
    a = np.asarray(a, dtype=complex)
    return float(np.abs(np.linalg.eigvalsh((a + a.conj().T) / 2)).sum())


def helstrom_guess(state: CqState) -> float:
    """Optimal probability of guessing a binary outcome from the side system."""
    if len(state.probs) != 2:
        raise NotImplementedError("closed-form guessing probability needs exactly two outcomes")
    (p0, p1), (s0, s1) = state.probs, state.states
    if s0.dim != s1.dim:
        raise DimensionError("side states differ in dimension")
    return 0.5 * (1.0 + trace_norm(p0 * s0.matrix - p1 * s1.matrix))


def entangled_example() -> CqState:
    """Alice measures her half of (|HH> + |VV>)/sqrt 2 in the computational basis."""
    ket0 = DensityMatrix(np.diag([1.0, 0.0]))
    ket1 = DensityMatrix(np.diag([0.0, 1.0]))
    return CqState((0.5, 0.5), (ket0, ket1))


def marginal_of_outcomes(state: CqState) -> DensityMatrix:
    """State of the measured system reconstructed from a cq-state in the computational basis."""
    return DensityMatrix(np.diag(state.probs).astype(complex))


def rotated_qubit_basis(theta: float) -> Povm:
    """Computational basis rotated by ``theta`` about the Bloch y axis."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return Povm.from_basis([np.array([c, s]), np.array([-s, c])])
