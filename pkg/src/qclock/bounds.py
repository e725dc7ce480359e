"""Consistency checks of the gamma clock against physical timekeeping.

Constants are fixed values so reports are bit-reproducible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from . import clock
from .errors import QClockError

HBAR = 1.054571817e-34  # J s
PLANCK_H = 2.0 * math.pi * HBAR
ELECTRON_VOLT = 1.602176634e-19  # J
PLANCK_TIME = 5.39e-44  # s, two-digit value used for the tick-rate report
JULIAN_YEAR = 365.25 * 86400.0  # s

CESIUM_HYPERFINE_HZ = 9.19263177e9


class FrequencyConvention(str, Enum):
    """How the transition frequency enters the decoherence rate.

    ORDINARY uses nu = f; ANGULAR uses nu = 2 pi f = Delta E / hbar.
    """

    ORDINARY = "ordinary"
    ANGULAR = "angular"


@dataclass(frozen=True)
class AtomicClockSpec:
    transition_frequency: float  # Hz
    ramsey_time: float  # s
    name: str = ""

    def __post_init__(self):
        if not (self.transition_frequency > 0.0 and self.ramsey_time > 0.0):
            raise QClockError("transition frequency and Ramsey time must be positive")

    @property
    def energy_gap_ev(self) -> float:
        return PLANCK_H * self.transition_frequency / ELECTRON_VOLT

    @classmethod
    def cesium(cls, ramsey_time: float = 1.0) -> AtomicClockSpec:
        # Ramsey times are "a few seconds"; 1 s is the conservative default
        return cls(CESIUM_HYPERFINE_HZ, ramsey_time, "Cs-133 hyperfine")


def kappa_lower_bound(spec: AtomicClockSpec, frequency_convention=FrequencyConvention.ORDINARY) -> float:
    """Smallest kappa with G * T_R < 1, using G = nu^2 / (2 kappa).

    Returns nu^2 T_R / 2 with nu set by ``frequency_convention``.
    """
    convention = FrequencyConvention(frequency_convention)
    nu = spec.transition_frequency
    if convention is FrequencyConvention.ANGULAR:
        nu *= 2.0 * math.pi
    return nu * nu * spec.ramsey_time / 2.0


@dataclass(frozen=True)
class TickReport:
    kappa: float
    delta: float
    tau: float
    rate: float
    p_at_least_one: float


def planck_tick_report(kappa: float, delta: float = PLANCK_TIME, tau: float = 1e-21) -> TickReport:
    rate = clock.levy_tail_rate(kappa, delta)
    p = clock.prob_at_least_one_tick(kappa, delta, tau)
    return TickReport(kappa, delta, tau, rate, p)


@dataclass(frozen=True)
class EstimationBound:
    fisher_information: float
    inverse_information: float  # s^2
    root_inverse_information: float  # s


def estimation_error_bound(kappa: float, t: float) -> EstimationBound:
    """Cramer-Rao style bounds from the gamma-clock Fisher information.

    Both 1/I and 1/sqrt(I) are returned; which one is quoted as "the error"
    is left to the caller.
    """
    info = clock.fisher_information(kappa, t)
    return EstimationBound(info, 1.0 / info, 1.0 / math.sqrt(info))
