"""Density matrices, Hamiltonians and unitary conjugation.

Unitary evolution is always carried out in the energy eigenbasis: the
propagator exp(-iH tau) is the diagonal phase matrix exp(-i E_n tau) there,
which is exact for any tau and lets one decomposition serve many steps.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DimensionMismatch, InvalidDuration, NonHermitianInput, QClockError

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
POSITIVITY_TOL = 1e-10
RECONSTRUCTION_TOL = 1e-10


def hermitian_part(a: np.ndarray) -> np.ndarray:
    """Return (a + a^dagger) / 2 over the last two axes."""
    return 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))


def hermiticity_error(a: np.ndarray) -> float:
    return float(np.max(np.abs(a - np.conj(np.swapaxes(a, -1, -2))), initial=0.0))


def _as_square(matrix, name: str = "matrix") -> np.ndarray:
    a = np.array(matrix, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise DimensionMismatch(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    return a


class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite state.

    The constructor validates all three properties and stores a symmetrized,
    read-only copy of the entries.
    """

    __slots__ = ("_data",)

    def __init__(self, entries, *, check: bool = True):
        a = _as_square(entries, "density matrix")
        if check:
            herr = hermiticity_error(a)
            if herr > HERMITIAN_TOL:
                raise NonHermitianInput(f"density matrix not Hermitian (error {herr:.3e})")
        a = hermitian_part(a)
        if check:
            tr = np.trace(a).real
            if abs(tr - 1.0) > TRACE_TOL:
                raise QClockError(f"density matrix trace is {tr!r}, expected 1")
            lo = float(np.linalg.eigvalsh(a)[0])
            if lo < -POSITIVITY_TOL:
                raise QClockError(f"density matrix has negative eigenvalue {lo:.3e}")
        a.setflags(write=False)
        self._data = a

    @classmethod
    def from_pure(cls, psi) -> DensityMatrix:
        v = np.asarray(psi, dtype=complex).ravel()
        norm = np.linalg.norm(v)
        if norm == 0.0:
            raise QClockError("state vector must be nonzero")
        v = v / norm
        return cls(np.outer(v, v.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> DensityMatrix:
        return cls(np.eye(dim, dtype=complex) / dim)

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def dim(self) -> int:
        return self._data.shape[0]

    def purity(self) -> float:
        return float(np.real(np.vdot(self._data, self._data)))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self._data)

    def __array__(self, dtype=None, copy=None):
        return np.array(self._data, dtype=dtype)

    def __repr__(self) -> str:
        return f"DensityMatrix(dim={self.dim})"


@dataclass(frozen=True, eq=False)
class HamiltonianSpec:
    """A Hermitian operator together with its spectral decomposition.

    ``eigenvalues`` are ascending and ``eigenvectors`` holds the
    corresponding orthonormal eigenvectors as columns.
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def transition_frequencies(self) -> np.ndarray:
        """Matrix of nu_mn = E_m - E_n."""
        e = self.eigenvalues
        return e[:, None] - e[None, :]

    def to_energy_basis(self, a: np.ndarray) -> np.ndarray:
        v = self.eigenvectors
        return v.conj().T @ a @ v

    def from_energy_basis(self, a: np.ndarray) -> np.ndarray:
        v = self.eigenvectors
        return v @ a @ v.conj().T


class BlochVector(NamedTuple):
    x: float
    y: float
    z: float

    def norm(self) -> float:
        return float(np.sqrt(self.x**2 + self.y**2 + self.z**2))


def spectral_decompose(h_matrix) -> HamiltonianSpec:
    """Diagonalize a Hermitian matrix.

    Raises NonHermitianInput if max |H_mn - conj(H_nm)| exceeds 1e-12.
    """
    h = _as_square(h_matrix, "Hamiltonian")
    herr = hermiticity_error(h)
    if herr > HERMITIAN_TOL:
        raise NonHermitianInput(f"Hamiltonian not Hermitian (error {herr:.3e})")
    h = hermitian_part(h)
    evals, evecs = np.linalg.eigh(h)
    scale = max(1.0, float(np.max(np.abs(evals))))
    resid = np.max(np.abs(evecs @ np.diag(evals) @ evecs.conj().T - h))
    if resid > RECONSTRUCTION_TOL * scale:
        raise QClockError(f"spectral reconstruction residual {resid:.3e} too large")
    for arr in (h, evals, evecs):
        arr.setflags(write=False)
    return HamiltonianSpec(h, evals, evecs)


def conjugate_by_propagator(rho: DensityMatrix, h: HamiltonianSpec, tau: float) -> DensityMatrix:
    """Return exp(-iH tau) rho exp(iH tau) for clock time tau >= 0."""
    if rho.dim != h.dim:
        raise DimensionMismatch(f"state dim {rho.dim} != Hamiltonian dim {h.dim}")
    if not tau >= 0.0:
        raise InvalidDuration(f"clock time must be >= 0, got {tau!r}")
    if tau == 0.0:
        return rho
    phases = np.exp(-1j * h.eigenvalues * tau)
    v = h.eigenvectors
    u = (v * phases) @ v.conj().T
    out = u @ rho.data @ u.conj().T
    return DensityMatrix(hermitian_part(out), check=False)


def bloch_coordinates(rho: DensityMatrix) -> BlochVector:
    if rho.dim != 2:
        raise DimensionMismatch(f"Bloch coordinates need a qubit, got dim {rho.dim}")
    return bloch_arrays(rho.data)


def bloch_arrays(states: np.ndarray):
    """Vectorized Bloch coordinates for an array of qubit matrices (..., 2, 2)."""
    states = np.asarray(states)
    if states.shape[-2:] != (2, 2):
        raise DimensionMismatch(f"expected (..., 2, 2) array, got {states.shape}")
    x = 2.0 * states[..., 0, 1].real
    y = 2.0 * states[..., 1, 0].imag
    z = (states[..., 0, 0] - states[..., 1, 1]).real
    if states.ndim == 2:
        return BlochVector(float(x), float(y), float(z))
    return BlochVector(x, y, z)


# Pauli matrices and the single-qubit states used by the figure presets.
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def plus_x_state() -> DensityMatrix:
    return DensityMatrix.from_pure([1.0, 1.0])
