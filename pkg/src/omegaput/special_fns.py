"""Special functions behind the closed-form scale functions.

Kummer's 1F1 is summed here (Taylor series with compensated summation, large-t
asymptotic expansion).  Modified Bessel functions of general order come from
scipy; the half-integer orders used by the closed forms also have explicit
hyperbolic expressions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sps

from .errors import DomainError, PrecisionError

__all__ = [
    "SpecialFnConfig",
    "kummer_1f1",
    "kummer_1f1_scaled",
    "kummer_1f1_deriv",
    "gamma_fn",
    "bessel_basis",
    "bessel_basis_scaled",
    "bessel_basis_deriv",
    "bessel_i_series",
    "half_integer_basis",
]


@dataclass(frozen=True)
class SpecialFnConfig:
    series_tol: float = 1e-14
    max_terms: int = 10_000
    asymptotic_switch: float = 50.0

    def __post_init__(self):
        if not self.series_tol > 0:
            raise DomainError("series_tol must be positive")
        if self.max_terms < 100:
            raise DomainError("max_terms must be at least 100")


DEFAULT_CONFIG = SpecialFnConfig()


def _is_nonpositive_int(z: float) -> bool:
    return z <= 0 and float(z).is_integer()


def gamma_fn(z: float) -> float:
    if _is_nonpositive_int(z):
        raise DomainError(f"Gamma has a pole at {z}")
    return math.gamma(z)


def _series(a: float, b: float, t: float, cfg: SpecialFnConfig) -> float:
    total, comp = 1.0, 0.0
    term = 1.0
    for k in range(cfg.max_terms):
        term *= (a + k) / (b + k) * t / (k + 1)
        # Kahan summation
        y = term - comp
        s = total + y
        comp = (s - total) - y
        total = s
        if term == 0.0:
            return total
        if k > abs(t) and abs(term) < cfg.series_tol * abs(total):
            return total
    raise PrecisionError(f"1F1({a}, {b}; {t}) series did not converge in {cfg.max_terms} terms")


def _asymptotic_scaled(a: float, b: float, t: float) -> float:
    """e^{-t} 1F1(a, b; t) for large positive t (leading exponential branch)."""
    total, term = 1.0, 1.0
    best = 1.0
    for k in range(200):
        term *= (b - a + k) * (1 - a + k) / ((k + 1) * t)
        if abs(term) >= best:
            break
        best = abs(term)
        total += term
        if best < 1e-17 * abs(total):
            break
    log_pref = math.lgamma(b) - math.lgamma(a) + (a - b) * math.log(t)
    sign = math.copysign(1.0, math.gamma(b)) * math.copysign(1.0, math.gamma(a))
    return sign * math.exp(log_pref) * total


def kummer_1f1_scaled(a: float, b: float, t: float, cfg: SpecialFnConfig = DEFAULT_CONFIG) -> float:
    """e^{-t} * 1F1(a, b; t); finite for arguments where 1F1 overflows."""
    if _is_nonpositive_int(b):
        raise DomainError(f"1F1 undefined for b = {b}")
    if t < 0:
        return kummer_1f1(b - a, b, -t, cfg)
    if t >= cfg.asymptotic_switch and not _is_nonpositive_int(a):
        return _asymptotic_scaled(a, b, t)
    return _series(a, b, t, cfg) * math.exp(-t)


def kummer_1f1(a: float, b: float, t: float, cfg: SpecialFnConfig = DEFAULT_CONFIG) -> float:
    """Confluent hypergeometric function 1F1(a; b; t) for real arguments."""
    if _is_nonpositive_int(b):
        raise DomainError(f"1F1 undefined for b = {b}")
    if t == 0:
        return 1.0
    if t < 0:
        # Kummer transformation avoids alternating-series cancellation.
        return math.exp(t) * kummer_1f1(b - a, b, -t, cfg)
    if t >= cfg.asymptotic_switch and not _is_nonpositive_int(a):
        return _asymptotic_scaled(a, b, t) * math.exp(t)
    return _series(a, b, t, cfg)


def kummer_1f1_deriv(a: float, b: float, t: float, cfg: SpecialFnConfig = DEFAULT_CONFIG) -> float:
    return a / b * kummer_1f1(a + 1, b + 1, t, cfg)


# --- modified Bessel functions -------------------------------------------------


def bessel_basis_scaled(v: float, z):
    """(I_v(z) e^{-z}, K_v(z) e^{z}); the exponents are carried by the caller."""
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise DomainError("Bessel basis needs z > 0")
    return sps.ive(v, z), sps.kve(v, z)


def bessel_basis(v: float, z, cfg: SpecialFnConfig = DEFAULT_CONFIG):
    """(I_v(z), K_v(z)), independent solutions of z^2 F'' + z F' - (z^2 + v^2) F = 0."""
    if v < 0:
        raise DomainError("order must be nonnegative")
    z = np.asarray(z, dtype=float)
    if np.any(z > 700):
        raise PrecisionError("z > 700 overflows; use bessel_basis_scaled")
    two_v = 2.0 * v
    if two_v.is_integer() and int(two_v) % 2 == 1 and v <= 2.5:
        return half_integer_basis(v, z)
    i_s, k_s = bessel_basis_scaled(v, z)
    return i_s * np.exp(z), k_s * np.exp(-z)


def bessel_basis_deriv(v: float, z, cfg: SpecialFnConfig = DEFAULT_CONFIG):
    """(I_v'(z), K_v'(z)) from the order recurrences."""
    z = np.asarray(z, dtype=float)
    i_lo, k_lo = sps.iv(v - 1, z), sps.kv(v - 1, z)
    i_hi, k_hi = sps.iv(v + 1, z), sps.kv(v + 1, z)
    return 0.5 * (i_lo + i_hi), -0.5 * (k_lo + k_hi)


def half_integer_basis(v: float, z):
    """I_v, K_v for v in {1/2, 3/2, 5/2} in terms of sinh, cosh and exp."""
    z = np.asarray(z, dtype=float)
    sh, ch = np.sinh(z), np.cosh(z)
    ipref = np.sqrt(2.0 / (np.pi * z))
    kpref = np.sqrt(np.pi / (2.0 * z)) * np.exp(-z)
    if v == 0.5:
        return ipref * sh, kpref
    if v == 1.5:
        return ipref * (ch - sh / z), kpref * (1.0 + 1.0 / z)
    if v == 2.5:
        return ipref * ((1.0 + 3.0 / z**2) * sh - 3.0 * ch / z), kpref * (1.0 + 3.0 / z + 3.0 / z**2)
    raise DomainError(f"no hyperbolic form coded for order {v}")


def bessel_i_series(v: float, z: float, tol: float = 1e-16) -> float:
    """Power series of I_v(z); a reference for small and moderate z."""
    half = 0.5 * z
    term = half**v / math.gamma(v + 1.0)
    total = term
    k = 0
    while True:
        k += 1
        term *= half * half / (k * (k + v))
        total += term
        if term < tol * total:
            return total
