"""Closed-form omega-scale functions for linear and power discounts.

sigma = 0:  f'' = (A e^{nx} + B) f' + D e^{nx} f  becomes Kummer's equation in
            t = (A/n) e^{nx}, solved by 1F1(a, b; t) and t^{1-b} 1F1(a-b+1, 2-b; t).
lam = 0:    f'' = B f' + (D e^{nx} + E) f  becomes the modified Bessel equation
            of order v = 2 zeta/(n sigma^2) in z = (2/n) sqrt(D e^{nx}) after
            removing e^{Bx/2}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sps

from .errors import DomainError, PrecisionError
from .levy_model import ModelParams, psi_roots
from .omega_scale import DiscountFunction
from .special_fns import (
    bessel_basis_scaled,
    gamma_fn,
    half_integer_basis,
    kummer_1f1,
    kummer_1f1_deriv,
    kummer_1f1_scaled,
)

__all__ = [
    "KummerSolution",
    "BesselSolution",
    "kummer_scale_sigma0",
    "c_sigma0",
    "bessel_scale_lambda0",
    "c_lambda0",
    "bs_put_value",
]


def _exponent(discount: DiscountFunction) -> float:
    if discount.kind == "linear":
        return 1.0
    if discount.kind == "power":
        return discount.n
    raise DomainError(f"no closed form for discount kind {discount.kind!r}")


@dataclass
class KummerSolution:
    """f(x) = K1 1F1(a1, b1; t) + K2 t^{1-b} 1F1(a2, b2; t), t = (A/n) e^{nx}."""

    a1: float
    b1: float
    a2: float
    b2: float
    K1: float
    K2: float
    A: float
    n: float

    def t_of_x(self, x):
        return self.A / self.n * np.exp(self.n * np.asarray(x, dtype=float))

    def _basis(self, t):
        m1 = kummer_1f1(self.a1, self.b1, t)
        m2 = kummer_1f1(self.a2, self.b2, t)
        return m1, t ** (1.0 - self.b1) * m2

    def _basis_dx(self, t):
        # d/dx = n t d/dt
        d1 = kummer_1f1_deriv(self.a1, self.b1, t)
        m2 = kummer_1f1(self.a2, self.b2, t)
        d2 = kummer_1f1_deriv(self.a2, self.b2, t)
        one_b = 1.0 - self.b1
        return self.n * t * d1, self.n * t**one_b * (one_b * m2 + t * d2)

    def __call__(self, x):
        return np.vectorize(self._value)(x)

    def _value(self, x):
        y1, y2 = self._basis(float(self.t_of_x(x)))
        return self.K1 * y1 + self.K2 * y2

    def deriv(self, x):
        def one(xx):
            d1, d2 = self._basis_dx(float(self.t_of_x(xx)))
            return self.K1 * d1 + self.K2 * d2

        return np.vectorize(one)(x)

    def scaled(self, x):
        """f(x) e^{-t(x)}; stays finite at large x."""

        def one(xx):
            t = float(self.t_of_x(xx))
            return self.K1 * kummer_1f1_scaled(self.a1, self.b1, t) + self.K2 * t ** (
                1.0 - self.b1
            ) * kummer_1f1_scaled(self.a2, self.b2, t)

        return np.vectorize(one)(x)

    def growth_weight(self) -> float:
        """Coefficient of e^t t^{a-b} in the large-t expansion of f."""
        g1 = gamma_fn(self.b1) / gamma_fn(self.a1)
        g2 = gamma_fn(self.b2) / gamma_fn(self.a2)
        return self.K1 * g1 + self.K2 * g2


def _kummer_coefficients(discount: DiscountFunction, params: ModelParams, u: float):
    if params.sigma != 0 or params.lam <= 0:
        raise DomainError("Kummer closed form needs sigma = 0 and lam > 0")
    if params.zeta <= 0:
        raise DomainError("Kummer closed form needs zeta > 0")
    n = _exponent(discount)
    c_eff = discount.C * u**n
    z = params.zeta
    A = c_eff / z
    B = (params.lam - params.phi * z) / z
    D = c_eff * (n + params.phi) / z
    return n, c_eff, A, B, D


def kummer_scale_sigma0(discount: DiscountFunction, params: ModelParams, which: str, u: float = 1.0) -> KummerSolution:
    """Closed-form W (``which='W'``) or Z for sigma = 0 and omega_u(s) = omega(u s)."""
    n, c_eff, A, B, D = _kummer_coefficients(discount, params, u)
    b = 1.0 - B / n
    a = D / (A * n)
    if abs(b - round(b)) < 1e-8:
        raise DomainError(f"b = {b} is an integer; Kummer basis degenerates")
    z = params.zeta
    if which == "W":
        f0, df0 = 1.0 / z, (c_eff + params.lam) / z**2
    elif which == "Z":
        f0, df0 = 1.0, c_eff / z
    else:
        raise DomainError("which must be 'W' or 'Z'")
    sol = KummerSolution(a, b, a - b + 1.0, 2.0 - b, 0.0, 0.0, A, n)
    t0 = A / n
    y = sol._basis(t0)
    dy = sol._basis_dx(t0)
    mat = np.array([[y[0], y[1]], [dy[0], dy[1]]])
    if abs(np.linalg.det(mat)) < 1e-14 * np.abs(mat).max() ** 2:
        raise PrecisionError("singular initial-value system for Kummer weights")
    sol.K1, sol.K2 = np.linalg.solve(mat, [f0, df0])
    return sol


def c_sigma0(discount: DiscountFunction, params: ModelParams, u: float = 1.0) -> float:
    """lim Z/W from the large-t asymptotics of 1F1.

    Both basis functions grow like Gamma(b_i)/Gamma(a_i) e^t t^{a-b}; the
    t^{1-b} prefactor of the second one absorbs the A^{a_i - b_i} factors
    that appear when that prefactor is written as e^{(1-b) n x} instead.
    """
    zs = kummer_scale_sigma0(discount, params, "Z", u)
    ws = kummer_scale_sigma0(discount, params, "W", u)
    return zs.growth_weight() / ws.growth_weight()


@dataclass
class BesselSolution:
    """f(x) = e^{Bx/2} (K1 basis1(z) + K2 basis2(z)), z = (2/n) sqrt(D e^{nx}).

    The basis is (I_v, K_v), or (I_v, I_{-v}) for the half-integer orders
    1/2, 3/2, 5/2 where both are elementary.
    """

    v: float
    K1: float
    K2: float
    B: float
    D: float
    n: float
    hyperbolic: bool

    def z_of_x(self, x):
        return 2.0 / self.n * np.sqrt(self.D * np.exp(self.n * np.asarray(x, dtype=float)))

    def basis(self, z):
        if self.hyperbolic:
            i_pos, _ = half_integer_basis(self.v, z)
            return i_pos, _i_negative_half(self.v, z)
        i_s, k_s = bessel_basis_scaled(self.v, z)
        return i_s * np.exp(z), k_s * np.exp(-z)

    def basis_dz(self, z):
        if self.hyperbolic:
            i_lo = _i_any(self.v - 1.0, z)
            i_hi = _i_any(self.v + 1.0, z)
            j_lo = _i_any(-self.v - 1.0, z)
            j_hi = _i_any(-self.v + 1.0, z)
            return 0.5 * (i_lo + i_hi), 0.5 * (j_lo + j_hi)
        return 0.5 * (sps.iv(self.v - 1, z) + sps.iv(self.v + 1, z)), -0.5 * (sps.kv(self.v - 1, z) + sps.kv(self.v + 1, z))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        z = self.z_of_x(x)
        b1, b2 = self.basis(z)
        return np.exp(0.5 * self.B * x) * (self.K1 * b1 + self.K2 * b2)

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        z = self.z_of_x(x)
        b1, b2 = self.basis(z)
        d1, d2 = self.basis_dz(z)
        core = self.K1 * b1 + self.K2 * b2
        dcore = 0.5 * self.n * z * (self.K1 * d1 + self.K2 * d2)
        return np.exp(0.5 * self.B * x) * (0.5 * self.B * core + dcore)

    def scaled(self, x):
        """f(x) e^{-z(x)}; finite where f overflows."""
        x = np.asarray(x, dtype=float)
        z = self.z_of_x(x)
        if self.hyperbolic:
            with np.errstate(over="ignore"):
                b1 = _scaled_hyperbolic(self.v, z, swap=False)
                b2 = _scaled_hyperbolic(self.v, z, swap=True)
        else:
            i_s, k_s = bessel_basis_scaled(self.v, z)
            b1, b2 = i_s, k_s * np.exp(-2.0 * z)
        return np.exp(0.5 * self.B * x) * (self.K1 * b1 + self.K2 * b2)

    def growth_weight(self) -> float:
        """Coefficient of e^{Bx/2} e^z / sqrt(2 pi z) as x -> infinity."""
        return self.K1 + self.K2 if self.hyperbolic else self.K1


def _i_negative_half(v: float, z):
    """I_{-v} for half-integer v: sqrt(2/(pi z)) times the sinh/cosh-swapped I_v form."""
    z = np.asarray(z, dtype=float)
    sh, ch = np.sinh(z), np.cosh(z)
    pref = np.sqrt(2.0 / (np.pi * z))
    if v == 0.5:
        return pref * ch
    if v == 1.5:
        return pref * (sh - ch / z)
    if v == 2.5:
        return pref * ((1.0 + 3.0 / z**2) * ch - 3.0 * sh / z)
    raise DomainError(f"no hyperbolic form coded for order {v}")


def _scaled_hyperbolic(v: float, z, swap: bool):
    """e^{-z} I_v (swap=False) or e^{-z} I_{-v} (swap=True) for half-integer v."""
    em = np.exp(-2.0 * z)
    sh, ch = 0.5 * (1.0 - em), 0.5 * (1.0 + em)
    if swap:
        sh, ch = ch, sh
    pref = np.sqrt(2.0 / (np.pi * z))
    if v == 0.5:
        return pref * sh
    if v == 1.5:
        return pref * (ch - sh / z)
    return pref * ((1.0 + 3.0 / z**2) * sh - 3.0 * ch / z)


def _i_any(order: float, z):
    return sps.iv(order, z)


def _bessel_coefficients(discount: DiscountFunction, params: ModelParams, alpha: float, u: float):
    if params.lam != 0 or params.sigma <= 0:
        raise DomainError("Bessel closed form needs lam = 0 and sigma > 0")
    if params.zeta <= 0:
        raise DomainError("Bessel closed form needs zeta > 0")
    n = _exponent(discount)
    s2 = params.sigma**2
    zeta_a = params.zeta + s2 * alpha
    B = -2.0 * zeta_a / s2
    D = 2.0 * discount.C * u**n / s2
    E = -2.0 / s2 * (params.zeta * alpha + 0.5 * s2 * alpha**2)
    v = math.sqrt(max(B * B + 4.0 * E, 0.0)) / n
    return n, B, D, E, v


def bessel_scale_lambda0(discount: DiscountFunction, params: ModelParams, alpha: float, which: str,
                         u: float = 1.0) -> BesselSolution:
    """Closed-form tilted W or Z for lam = 0 with omega_u(s) = omega(u s)."""
    n, B, D, E, v = _bessel_coefficients(discount, params, alpha, u)
    if which == "W":
        f0, df0 = 0.0, 2.0 / params.sigma**2
    elif which == "Z":
        f0, df0 = 1.0, 0.0
    else:
        raise DomainError("which must be 'W' or 'Z'")
    hyperbolic = any(abs(v - h) < 1e-12 for h in (0.5, 1.5, 2.5))
    if hyperbolic:
        v = round(2 * v) / 2
    sol = BesselSolution(v, 0.0, 0.0, B, D, n, hyperbolic)
    z0 = float(sol.z_of_x(0.0))
    b = sol.basis(z0)
    db = sol.basis_dz(z0)
    # f(0) = K.b ; f'(0) = B/2 K.b + n z0/2 K.db
    mat = np.array([[b[0], b[1]], [0.5 * B * b[0] + 0.5 * n * z0 * db[0], 0.5 * B * b[1] + 0.5 * n * z0 * db[1]]])
    if abs(np.linalg.det(mat)) < 1e-14 * np.abs(mat).max() ** 2:
        raise PrecisionError("singular initial-value system for Bessel weights")
    sol.K1, sol.K2 = np.linalg.solve(mat, [f0, df0])
    return sol


def c_lambda0(discount: DiscountFunction, params: ModelParams, u: float = 1.0) -> float:
    """lim Z/W from the growing-basis weights at alpha = 0."""
    zs = bessel_scale_lambda0(discount, params, 0.0, "Z", u)
    ws = bessel_scale_lambda0(discount, params, 0.0, "W", u)
    den = ws.growth_weight()
    if den == 0:
        raise PrecisionError("zero growth weight for W")
    return zs.growth_weight() / den


def bs_put_value(s, params: ModelParams, q: float | None = None):
    """Perpetual put under Black-Scholes with constant discount q (default r).

    Returns (value, u_star) with value = (K - u*)(s/u*)^{-g} above u*.
    """
    if params.lam != 0:
        raise DomainError("Black-Scholes reduction needs lam = 0")
    q = params.r if q is None else q
    g = -psi_roots(q, params).roots[0]
    u_star = g * params.K / (g + 1.0)
    s = np.asarray(s, dtype=float)
    value = np.where(s <= u_star, params.K - s, (params.K - u_star) * (np.maximum(s, u_star) / u_star) ** (-g))
    return value, u_star
