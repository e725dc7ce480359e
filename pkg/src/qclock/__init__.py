"""Quantum dynamics driven by a random clock.

Submodules: ``qstate`` (states and unitary conjugation), ``clock`` (gamma and
inverse-Gaussian clocks), ``montecarlo`` (random-unitary trajectories),
``master`` (averaged master equation, exact solution), ``bounds`` (physical
consistency checks) and ``cli``.
"""
from .clock import ClockKind, ClockModel, ClockPath
from .errors import ConvergenceWarning, QClockError
from .master import (
    decoherence_rate,
    exact_energy_basis_solution,
    generator_apply,
    integrate,
    truncated_mode_exponent,
)
from .montecarlo import EnsembleEstimate, ensemble_average, evolve_trajectory
from .qstate import (
    BlochVector,
    DensityMatrix,
    HamiltonianSpec,
    bloch_coordinates,
    conjugate_by_propagator,
    spectral_decompose,
)

__version__ = "0.1.0"

__all__ = [
    "BlochVector",
    "ClockKind",
    "ClockModel",
    "ClockPath",
    "ConvergenceWarning",
    "DensityMatrix",
    "EnsembleEstimate",
    "HamiltonianSpec",
    "QClockError",
    "bloch_coordinates",
    "conjugate_by_propagator",
    "decoherence_rate",
    "ensemble_average",
    "evolve_trajectory",
    "exact_energy_basis_solution",
    "generator_apply",
    "integrate",
    "spectral_decompose",
    "truncated_mode_exponent",
]
