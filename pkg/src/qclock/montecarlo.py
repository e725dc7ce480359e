"""Random-unitary trajectories and their ensemble average.

Along one trajectory the state is exp(-iH Gamma_t) rho0 exp(iH Gamma_t), a
unitary image of the initial state, so it can be evaluated directly from the
sampled clock reading. The ensemble mean estimates the averaged density
matrix; per-component standard errors accompany it.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .clock import ClockModel, ClockPath, child_seed, make_rng, sample_path
from .errors import DimensionMismatch, InsufficientSamples
from .qstate import DensityMatrix, HamiltonianSpec, hermitian_part

# Trajectories are reduced in fixed-size blocks, in index order, so the result
# does not depend on how many workers produced them.
BLOCK_SIZE = 512


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    grid: np.ndarray
    clock: ClockPath
    states: np.ndarray

    def density_matrices(self) -> list[DensityMatrix]:
        return [DensityMatrix(s, check=False) for s in self.states]


@dataclass(frozen=True, eq=False)
class EnsembleEstimate:
    """Mean state over ``n_traj`` trajectories at each grid time.

    ``stderr_real`` and ``stderr_imag`` are the standard errors of the mean
    of the real and imaginary parts of each entry.
    """

    grid: np.ndarray
    mean: np.ndarray
    stderr_real: np.ndarray
    stderr_imag: np.ndarray
    n_traj: int

    def mean_states(self) -> list[DensityMatrix]:
        return [DensityMatrix(m, check=False) for m in self.mean]

    def within(self, reference: np.ndarray, n_sigma: float = 4.0, atol: float = 1e-12) -> np.ndarray:
        """Per-grid-point flag: every real component within n_sigma standard errors."""
        diff = self.mean - np.asarray(reference)
        ok_re = np.abs(diff.real) <= n_sigma * self.stderr_real + atol
        ok_im = np.abs(diff.imag) <= n_sigma * self.stderr_imag + atol
        return np.all(ok_re & ok_im, axis=(1, 2))


def _rho_array(rho0, h: HamiltonianSpec) -> np.ndarray:
    a = rho0.data if isinstance(rho0, DensityMatrix) else np.asarray(rho0, dtype=complex)
    if a.shape != (h.dim, h.dim):
        raise DimensionMismatch(f"state shape {a.shape} does not match Hamiltonian dim {h.dim}")
    return a


def _states_from_clock(rho_e: np.ndarray, h: HamiltonianSpec, readings: np.ndarray) -> np.ndarray:
    # energy-basis element (m, n) picks up exp(-i nu_mn Gamma)
    nu = h.transition_frequencies()
    phases = np.exp(-1j * nu[None, :, :] * readings[:, None, None])
    return hermitian_part(h.from_energy_basis(phases * rho_e))


def evolve_trajectory(rho0, h: HamiltonianSpec, model: ClockModel, grid, seed) -> TrajectoryRecord:
    """One random-clock trajectory; ``seed`` may be an int, SeedSequence or Generator."""
    a = _rho_array(rho0, h)
    path = sample_path(model, grid, make_rng(seed))
    states = _states_from_clock(h.to_energy_basis(a), h, path.values)
    states[0] = a
    return TrajectoryRecord(path.grid, path, states)


def _block_sums(rho_e, shift, h, model, grid, master_seed, start, stop):
    # moments of (state - shift); shifting by the initial state keeps the
    # variance free of cancellation when states barely move
    s1 = np.zeros((len(grid), h.dim, h.dim), dtype=complex)
    s2_re = np.zeros(s1.shape)
    s2_im = np.zeros(s1.shape)
    for idx in range(start, stop):
        path = sample_path(model, grid, np.random.default_rng(child_seed(master_seed, idx)))
        states = _states_from_clock(rho_e, h, path.values) - shift
        s1 += states
        s2_re += states.real**2
        s2_im += states.imag**2
    return s1, s2_re, s2_im


def ensemble_average(
    rho0,
    h: HamiltonianSpec,
    model: ClockModel,
    grid,
    n_traj: int,
    master_seed: int,
    *,
    workers: int = 1,
) -> EnsembleEstimate:
    """Average ``n_traj`` independent trajectories.

    Trajectory i uses the stream ``child_seed(master_seed, i)``; blocks of
    BLOCK_SIZE trajectories are summed and then combined in block order, so
    the estimate is bit-identical for any ``workers``.
    """
    if n_traj < 2:
        raise InsufficientSamples(f"need at least 2 trajectories, got {n_traj}")
    a = _rho_array(rho0, h)
    rho_e = h.to_energy_basis(a)
    grid = np.asarray(grid, dtype=float)
    bounds = [(s, min(s + BLOCK_SIZE, n_traj)) for s in range(0, n_traj, BLOCK_SIZE)]

    def run(b):
        return _block_sums(rho_e, a, h, model, grid, master_seed, *b)

    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(run, bounds))
    else:
        blocks = [run(b) for b in bounds]

    s1 = sum(b[0] for b in blocks)
    s2_re = sum(b[1] for b in blocks)
    s2_im = sum(b[2] for b in blocks)
    n = float(n_traj)
    dev = s1 / n
    var_re = np.maximum(s2_re - n * dev.real**2, 0.0) / (n - 1.0)
    var_im = np.maximum(s2_im - n * dev.imag**2, 0.0) / (n - 1.0)
    mean = hermitian_part(a + dev)
    mean[0] = a
    return EnsembleEstimate(grid, mean, np.sqrt(var_re / n), np.sqrt(var_im / n), int(n_traj))
