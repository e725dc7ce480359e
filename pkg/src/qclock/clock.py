"""Random clock processes.

Two subordinators are provided, both normalized so that E[Gamma_t] = t:

* the gamma clock, whose reading at time t is Gamma(shape=kappa t, rate=kappa);
* the inverse-Gaussian clock, whose characteristic exponent is
  (kappa/2)(1 - sqrt(1 - 4 alpha / kappa)).

All times are in seconds (or model units when hbar = 1) and kappa is a rate.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import special
from .errors import (
    BranchDomain,
    InvalidDuration,
    InvalidGrid,
    InvalidOrder,
    InvalidThreshold,
    InvalidTime,
    OverflowSaturation,
    QClockError,
)

_LOG_MAX_FLOAT = math.log(np.finfo(float).max)


class ClockKind(str, Enum):
    GAMMA = "gamma"
    INVERSE_GAUSSIAN = "ig"


@dataclass(frozen=True)
class ClockModel:
    kind: ClockKind
    kappa: float

    def __post_init__(self):
        object.__setattr__(self, "kind", ClockKind(self.kind))
        kappa = float(self.kappa)
        if not (kappa > 0.0 and math.isfinite(kappa)):
            raise QClockError(f"kappa must be positive and finite, got {self.kappa!r}")
        object.__setattr__(self, "kappa", kappa)

    @property
    def lam(self) -> float:
        """lambda = 1 / kappa."""
        return 1.0 / self.kappa

    @classmethod
    def gamma(cls, kappa: float) -> ClockModel:
        return cls(ClockKind.GAMMA, kappa)

    @classmethod
    def inverse_gaussian(cls, kappa: float) -> ClockModel:
        return cls(ClockKind.INVERSE_GAUSSIAN, kappa)

    @classmethod
    def from_lambda(cls, kind, lam: float) -> ClockModel:
        if not lam > 0.0:
            raise QClockError(f"lambda must be positive, got {lam!r}")
        return cls(ClockKind(kind), 1.0 / lam)

    @property
    def convergence_radius(self) -> float:
        """Radius in |nu| of the power series of the characteristic exponent."""
        if self.kind is ClockKind.GAMMA:
            return self.kappa
        return self.kappa / 4.0


@dataclass(frozen=True, eq=False)
class ClockPath:
    grid: np.ndarray
    values: np.ndarray

    def increments(self) -> np.ndarray:
        return np.diff(self.values)


def child_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    """Seed for trajectory ``index`` of an ensemble.

    The rule is ``SeedSequence(entropy=master_seed, spawn_key=(index,))``,
    which equals ``SeedSequence(master_seed).spawn(n)[index]`` for any n.
    """
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(index),))


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _inverse_gaussian(rng: np.random.Generator, mean, shape, size=None):
    # Michael-Schucany-Haas transform; the small root is taken as mean^2 / large
    # root to avoid cancellation when mean * y / shape is large.
    mean = np.asarray(mean, dtype=float)
    shape = np.asarray(shape, dtype=float)
    if size is None:
        size = np.broadcast(mean, shape).shape
    y = rng.standard_normal(size) ** 2
    my = mean * y
    big = mean + mean * my / (2.0 * shape) + (mean / (2.0 * shape)) * np.sqrt(
        4.0 * shape * my + my * my
    )
    small = mean * mean / big
    u = rng.random(size)
    return np.where(u <= mean / (mean + small), small, big)


def _draw(model: ClockModel, dt, rng: np.random.Generator, size=None):
    if model.kind is ClockKind.GAMMA:
        return rng.gamma(model.kappa * dt, model.lam, size)
    # mean dt, shape kappa dt^2 / 2 (variance 2 dt / kappa), matching the
    # characteristic exponent used by mgf() and cn_coefficient()
    return _inverse_gaussian(rng, dt, 0.5 * model.kappa * np.square(dt), size)


def sample_increment(model: ClockModel, dt: float, rng, size=None):
    """Draw clock increments over a Newtonian interval of length dt."""
    if not dt > 0.0:
        raise InvalidDuration(f"dt must be > 0, got {dt!r}")
    return _draw(model, float(dt), make_rng(rng), size)


def _check_grid(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size == 0:
        raise InvalidGrid("grid must be a non-empty 1-d sequence")
    if g[0] != 0.0:
        raise InvalidGrid(f"grid must start at 0, got {g[0]!r}")
    if g.size > 1 and not np.all(np.diff(g) > 0.0):
        raise InvalidGrid("grid must be strictly ascending")
    return g


def sample_path(model: ClockModel, grid, rng) -> ClockPath:
    """Sample Gamma_t at each grid time, starting from Gamma_0 = 0.

    Increments over successive cells are drawn independently from the exact
    marginal law, so the path is exact in distribution at the grid points.
    """
    g = _check_grid(grid)
    values = np.zeros_like(g)
    if g.size > 1:
        values[1:] = np.cumsum(_draw(model, np.diff(g), make_rng(rng)))
    return ClockPath(g, values)


def cumulant_exponent(model: ClockModel, alpha: complex) -> complex:
    """Per-unit-time log moment generating function, log E[exp(alpha Gamma_t)] / t."""
    alpha = complex(alpha)
    k = model.kappa
    if model.kind is ClockKind.GAMMA:
        if not alpha.real < k:
            raise BranchDomain(f"gamma clock MGF needs Re(alpha) < kappa, got {alpha}")
        return -k * cmath.log(1.0 - alpha / k)
    if not alpha.real <= k / 4.0:
        raise BranchDomain(f"inverse-Gaussian MGF needs Re(alpha) <= kappa/4, got {alpha}")
    # (k/2)(1 - sqrt(1 - 4a/k)) rewritten without cancellation
    return 2.0 * alpha / (1.0 + cmath.sqrt(1.0 - 4.0 * alpha / k))


def mgf(model: ClockModel, alpha: complex, t: float) -> complex:
    """E[exp(alpha Gamma_t)] with principal branches for complex alpha."""
    if not t >= 0.0:
        raise InvalidTime(f"t must be >= 0, got {t!r}")
    if alpha == 0:
        return 1.0 + 0.0j
    return cmath.exp(t * cumulant_exponent(model, alpha))


def characteristic_function(model: ClockModel, nu, t: float):
    """E[exp(-i nu Gamma_t)], vectorized over nu.

    This is the factor multiplying an energy-basis matrix element with
    transition frequency nu.
    """
    nu = np.asarray(nu, dtype=float)
    k = model.kappa
    if model.kind is ClockKind.GAMMA:
        expo = -k * np.log1p(1j * nu / k)
    else:
        expo = -2j * nu / (1.0 + np.sqrt(1.0 + 4j * nu / k))
    return np.exp(t * expo)


def log_cn(model: ClockModel, n: int) -> float:
    """Natural log of cn_coefficient(model, n)."""
    if not (isinstance(n, (int, np.integer)) and n >= 2):
        raise InvalidOrder(f"c_n needs integer n >= 2, got {n!r}")
    n = int(n)
    log_lam = -math.log(model.kappa)
    if model.kind is ClockKind.GAMMA:
        # (n-1)! lam^(n-1)
        return math.lgamma(n) + (n - 1) * log_lam
    # 2 (2n-3)! / (n-2)! lam^(n-1)
    return math.log(2.0) + math.lgamma(2 * n - 2) - math.lgamma(n - 1) + (n - 1) * log_lam


def cn_coefficient(model: ClockModel, n: int) -> float:
    """Rate c_n = lim E[(dGamma)^n] / dt for n >= 2."""
    log_value = log_cn(model, n)
    if log_value > _LOG_MAX_FLOAT:
        raise OverflowSaturation(f"c_{n} = exp({log_value:.1f}) overflows a double")
    n = int(n)
    if n <= 20:
        lam = model.lam
        if model.kind is ClockKind.GAMMA:
            return math.factorial(n - 1) * lam ** (n - 1)
        return 2 * math.factorial(2 * n - 3) // math.factorial(n - 2) * lam ** (n - 1)
    return math.exp(log_value)


def gamma_raw_moment(kappa: float, n: int, dt: float) -> float:
    """E[(dGamma)^n] = dt (dt + 1/kappa) ... (dt + (n-1)/kappa) for the gamma clock."""
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise InvalidOrder(f"moment order must be an integer >= 1, got {n!r}")
    if not dt > 0.0:
        raise InvalidDuration(f"dt must be > 0, got {dt!r}")
    result = dt
    for j in range(1, int(n)):
        result *= dt + j / kappa
    return result


def levy_tail_rate(kappa: float, delta: float) -> float:
    """Rate of gamma-clock ticks of size >= delta: kappa * Gamma(0, kappa delta)."""
    if not delta > 0.0:
        raise InvalidThreshold(f"tick threshold must be > 0, got {delta!r}")
    if not kappa > 0.0:
        raise QClockError(f"kappa must be > 0, got {kappa!r}")
    return kappa * special.exp1(kappa * delta)


def poisson_tick_probability(n: int, kappa: float, delta: float, tau: float) -> float:
    """Probability of exactly n ticks of size >= delta in a window tau."""
    if not (isinstance(n, (int, np.integer)) and n >= 0):
        raise QClockError(f"tick count must be a nonnegative integer, got {n!r}")
    if not tau > 0.0:
        raise InvalidDuration(f"window must be > 0, got {tau!r}")
    mean = levy_tail_rate(kappa, delta) * tau
    if mean == 0.0:
        return 1.0 if n == 0 else 0.0
    return math.exp(n * math.log(mean) - mean - math.lgamma(n + 1))


def prob_at_least_one_tick(kappa: float, delta: float, tau: float) -> float:
    """1 - P(0) = 1 - exp(-r_delta tau)."""
    if not tau > 0.0:
        raise InvalidDuration(f"window must be > 0, got {tau!r}")
    return -math.expm1(-levy_tail_rate(kappa, delta) * tau)


def fisher_information(kappa: float, t: float) -> float:
    """Fisher information about t carried by a gamma clock reading: kappa^2 psi'(kappa t)."""
    if not t > 0.0:
        raise InvalidTime(f"t must be > 0, got {t!r}")
    return kappa * kappa * special.trigamma(kappa * t)
