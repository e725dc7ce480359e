"""Master equation for the clock-averaged density matrix.

Averaging exp(-iH dGamma) rho exp(iH dGamma) over the clock gives

    d rho / dt = i[rho, H] + sum_{n>=2} c_n B_n(rho, H),
    B_n(rho, H) = sum_{k=0}^{n} (-iH)^k / k! rho (iH)^(n-k) / (n-k)!.

In the energy eigenbasis B_n acts entrywise: element (m, n) is multiplied by
(-i nu_mn)^n / n! with nu_mn = E_m - E_n. The whole generator is therefore a
Hadamard multiplier whose (m, n) entry is the truncated characteristic
exponent mu_M(nu_mn) = sum_{n=1}^{M+1} c_n (-i nu)^n / n!, with c_1 = 1.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .clock import ClockKind, ClockModel, characteristic_function, log_cn
from .errors import ConvergenceWarning, DimensionMismatch, InvalidOrder, InvalidTime, StepTooLarge
from .qstate import DensityMatrix, HamiltonianSpec, hermitian_part

TRACE_DRIFT_LIMIT = 1e-8
DEFAULT_STEP_SCALE = 0.01


def check_order(order) -> int:
    """Validate a truncation order M >= 0 (terms n = 1 .. M+1 are kept)."""
    if isinstance(order, bool) or not isinstance(order, (int, np.integer)) or order < 0:
        raise InvalidOrder(f"truncation order must be an integer >= 0, got {order!r}")
    return int(order)


def _mode_multiplier(nu, model: ClockModel | None, order: int, cn: Sequence[float] | None = None):
    """sum_{n=1}^{order+1} (c_n / n!) z^n with z = -i nu and c_1 = 1."""
    nu = np.asarray(nu, dtype=float)
    z = (-1j * nu).astype(complex)
    total = z.copy()
    if cn is not None:
        power = z.copy()
        for n in range(2, order + 2):
            power = power * z
            total = total + (float(cn[n - 2]) / math.factorial(n)) * power
        return total
    # term_n = term_{n-1} * z * (a_n / a_{n-1}), a_n = c_n / n!, so neither the
    # coefficient nor the power of z overflows on its own
    term = z.copy()
    prev = 0.0
    for n in range(2, order + 2):
        cur = log_cn(model, n) - math.lgamma(n + 1)
        term = term * z * math.exp(cur - prev)
        prev = cur
        total = total + term
    return total


def truncated_mode_exponent(nu, model: ClockModel, order: int):
    """mu_M(nu) = sum_{n=1}^{M+1} c_n (-i nu)^n / n!.

    Under the order-M truncated equation an energy-basis element with
    transition frequency nu evolves as exp(mu_M(nu) t). Emits
    ConvergenceWarning when |nu| reaches the radius of convergence of the
    untruncated series (|lambda nu| >= 1 for the gamma clock).
    """
    order = check_order(order)
    nu_arr = np.asarray(nu, dtype=float)
    if order > 0 and np.any(np.abs(nu_arr) >= model.convergence_radius):
        warnings.warn(
            f"|nu| = {np.max(np.abs(nu_arr)):g} is outside the convergence radius "
            f"{model.convergence_radius:g}; the truncated series diverges as M grows",
            ConvergenceWarning,
            stacklevel=2,
        )
    out = _mode_multiplier(nu_arr, model, order)
    return complex(out) if out.ndim == 0 else out


def exact_mode_exponent(nu, model: ClockModel):
    """Untruncated exponent: log E[exp(-i nu Gamma_t)] / t (principal branch)."""
    nu = np.asarray(nu, dtype=float)
    k = model.kappa
    if model.kind is ClockKind.GAMMA:
        out = -k * np.log1p(1j * nu / k)
    else:
        out = -2j * nu / (1.0 + np.sqrt(1.0 + 4j * nu / k))
    return complex(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ModeExponent:
    m: int
    n: int
    nu: float
    exponent: complex


def mode_exponents(h: HamiltonianSpec, model: ClockModel, order: int | None = None) -> list[ModeExponent]:
    """Per-mode rates for every off-diagonal pair; ``order=None`` gives the exact exponent."""
    nu = h.transition_frequencies()
    if order is None:
        mu = exact_mode_exponent(nu, model)
    else:
        mu = _mode_multiplier(nu, model, check_order(order))
    d = h.dim
    return [
        ModeExponent(m, n, float(nu[m, n]), complex(mu[m, n]))
        for m in range(d)
        for n in range(d)
        if m != n
    ]


def _check_dims(rho, h: HamiltonianSpec) -> np.ndarray:
    a = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    if a.shape != (h.dim, h.dim):
        raise DimensionMismatch(f"state shape {a.shape} does not match Hamiltonian dim {h.dim}")
    return a


def generator_apply(
    rho,
    h: HamiltonianSpec,
    model: ClockModel | None,
    order: int,
    *,
    cn: Sequence[float] | None = None,
) -> np.ndarray:
    """Evaluate d rho / dt of the order-M truncated master equation.

    ``cn`` optionally overrides the clock model with explicit coefficients
    c_2, c_3, ... (at least M of them). The result is Hermitian and traceless.
    """
    order = check_order(order)
    if cn is not None and len(cn) < order:
        raise InvalidOrder(f"need {order} coefficients c_2..c_{order + 1}, got {len(cn)}")
    if cn is None and model is None and order > 0:
        raise InvalidOrder("either a clock model or explicit c_n must be given")
    a = _check_dims(rho, h)
    w = _mode_multiplier(h.transition_frequencies(), model, order, cn)
    out = hermitian_part(h.from_energy_basis(w * h.to_energy_basis(a)))
    # the diagonal multiplier is exactly zero, so any trace left is basis-change
    # rounding, which grows with |mu|; remove it
    out[np.diag_indices(h.dim)] -= np.trace(out).real / h.dim
    return out


@dataclass(frozen=True, eq=False)
class IntegrationResult:
    """Fixed-step solution of a truncated master equation.

    States may leave the positive cone when the truncation is poor, so they
    are kept as raw arrays alongside their smallest eigenvalues.
    """

    order: int
    times: np.ndarray
    states: np.ndarray
    min_eigenvalues: np.ndarray
    trace_errors: np.ndarray

    def __iter__(self) -> Iterator[tuple[float, np.ndarray]]:
        return iter(zip(self.times, self.states))

    def __len__(self) -> int:
        return len(self.times)


def default_step(h: HamiltonianSpec, model: ClockModel | None, order: int, cn=None) -> float:
    """Step with dt * max|mu_M(nu_mn)| = 0.01 (dt * max|E| <= 0.01 at low order)."""
    w = _mode_multiplier(h.transition_frequencies(), model, order, cn)
    scale = max(float(np.max(np.abs(w))), float(np.max(np.abs(h.eigenvalues))))
    return DEFAULT_STEP_SCALE / scale if scale > 0.0 else DEFAULT_STEP_SCALE


def integrate(
    rho0,
    h: HamiltonianSpec,
    model: ClockModel | None,
    order: int,
    t_end: float,
    dt_step: float | None = None,
    *,
    cn: Sequence[float] | None = None,
) -> IntegrationResult:
    """Classical RK4 integration of ``generator_apply`` from t = 0 to t_end.

    The state is re-symmetrized after every step. The final step is
    shortened to land on t_end exactly.
    """
    order = check_order(order)
    if not t_end >= 0.0:
        raise InvalidTime(f"t_end must be >= 0, got {t_end!r}")
    if dt_step is None:
        dt_step = default_step(h, model, order, cn)
    if not dt_step > 0.0:
        raise InvalidTime(f"dt_step must be > 0, got {dt_step!r}")
    rho = np.array(_check_dims(rho0, h), dtype=complex)
    tr0 = np.trace(rho).real

    w = _mode_multiplier(h.transition_frequencies(), model, order, cn)
    v = h.eigenvectors
    vh = v.conj().T

    def f(r):
        return v @ (w * (vh @ r @ v)) @ vh

    n_full = int(math.floor(t_end / dt_step + 1e-9))
    times = [i * dt_step for i in range(n_full + 1)]
    if t_end - times[-1] > 1e-12 * max(1.0, t_end):
        times.append(t_end)
    times = np.array(times)
    states = np.empty((len(times), h.dim, h.dim), dtype=complex)
    states[0] = rho
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(1, len(times)):
            step = times[i] - times[i - 1]
            k1 = f(rho)
            k2 = f(rho + 0.5 * step * k1)
            k3 = f(rho + 0.5 * step * k2)
            k4 = f(rho + step * k3)
            rho = hermitian_part(rho + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
            if not np.all(np.isfinite(rho)):
                raise StepTooLarge(f"solution diverged at t = {times[i]:g}; reduce dt_step")
            states[i] = rho

    trace_errors = np.abs(np.trace(states, axis1=1, axis2=2).real - tr0)
    drift = float(np.max(trace_errors))
    if not (drift <= TRACE_DRIFT_LIMIT and np.all(np.isfinite(states))):
        raise StepTooLarge(f"trace drift {drift:.3e} exceeds {TRACE_DRIFT_LIMIT:g}; reduce dt_step")
    min_eigs = np.linalg.eigvalsh(states)[:, 0]
    return IntegrationResult(order, times, states, min_eigs, trace_errors)


def exact_trajectory(rho0, h: HamiltonianSpec, model: ClockModel, times) -> np.ndarray:
    """Clock-averaged states at each time, as an array of shape (T, d, d)."""
    a = _check_dims(rho0, h)
    times = np.asarray(times, dtype=float)
    if np.any(times < 0.0):
        raise InvalidTime("times must be >= 0")
    nu = h.transition_frequencies()
    factors = characteristic_function(model, nu[None, :, :], times[:, None, None])
    return hermitian_part(h.from_energy_basis(factors * h.to_energy_basis(a)))


def exact_energy_basis_solution(rho0: DensityMatrix, h: HamiltonianSpec, model: ClockModel, t: float) -> DensityMatrix:
    """Exact averaged state at time t.

    Each energy-basis element is multiplied by E[exp(-i nu_mn Gamma_t)];
    for the gamma clock that is (1 + i nu_mn / kappa)^(-kappa t).
    """
    if not t >= 0.0:
        raise InvalidTime(f"t must be >= 0, got {t!r}")
    _check_dims(rho0, h)
    if t == 0.0:
        return rho0
    return DensityMatrix(exact_trajectory(rho0, h, model, [t])[0], check=False)


def decoherence_rate(nu, model: ClockModel):
    """Decay rate of |rho_mn| for transition frequency nu.

    Gamma clock: (kappa/2) log(1 + nu^2/kappa^2), about nu^2 / (2 kappa) for
    large kappa.
    """
    nu = np.asarray(nu, dtype=float)
    k = model.kappa
    if model.kind is ClockKind.GAMMA:
        out = 0.5 * k * np.log1p((nu / k) ** 2)
    else:
        out = -np.real(np.asarray(exact_mode_exponent(nu, model)))
    return float(out) if out.ndim == 0 else out
