"""Special functions needed by the clock module.

Only two are required: the exponential integral E1(x) = Gamma(0, x), which
gives the tail of the gamma-process Levy measure, and the trigamma function,
which gives the Fisher information of a gamma clock reading.
"""
from __future__ import annotations

import math

EULER_GAMMA = 0.57721566490153286061

_EPS = 1e-16
_CF_MAX_ITER = 500
_SERIES_MAX_ITER = 200

# Bernoulli-number coefficients B_2k of the trigamma asymptotic expansion
# psi'(x) ~ 1/x + 1/(2x^2) + sum_k B_2k / x^(2k+1)
_TRIGAMMA_BERNOULLI = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
)
_TRIGAMMA_SHIFT = 12.0


def exp1(x: float) -> float:
    """Upper incomplete gamma function Gamma(0, x) = E1(x) for x > 0.

    A power series is used for x <= 1 and a modified-Lentz continued
    fraction above that.
    """
    if not x > 0.0:
        raise ValueError(f"exp1 requires x > 0, got {x!r}")
    if x <= 1.0:
        # E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k k!)
        total = 0.0
        term = 1.0
        for k in range(1, _SERIES_MAX_ITER):
            term *= -x / k
            contrib = term / k
            total += contrib
            if abs(contrib) < _EPS * abs(total):
                break
        return -EULER_GAMMA - math.log(x) - total
    if x > 745.0:
        return 0.0
    # E1(x) = e^{-x} / (x + 1 - 1/(x + 3 - 4/(x + 5 - ...)))
    tiny = 1e-300
    b = x + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _CF_MAX_ITER):
        a = -float(i * i)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h * math.exp(-x)


def trigamma(x: float) -> float:
    """Trigamma function psi'(x) for x > 0.

    Shifts x upward with psi'(x) = psi'(x + 1) + 1/x^2 until the asymptotic
    expansion is accurate to double precision.
    """
    if not x > 0.0:
        raise ValueError(f"trigamma requires x > 0, got {x!r}")
    acc = 0.0
    while x < _TRIGAMMA_SHIFT:
        acc += 1.0 / (x * x)
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    tail = 0.0
    power = inv * inv2
    for b in _TRIGAMMA_BERNOULLI:
        tail += b * power
        power *= inv2
    return acc + inv + 0.5 * inv2 + tail
