"""Classical q-scale functions W^(q), Z^(q) for exponential jumps.

With {gamma_i} the real roots of psi(theta) = q,

    W^(q)(x) = sum_i exp(gamma_i x) / psi'(gamma_i),              x >= 0
    Z^(q)(x) = 1 + q sum_i (exp(gamma_i x) - 1) / (gamma_i psi'(gamma_i)).
"""

from __future__ import annotations

import numpy as np
from scipy import integrate

from .errors import DomainError, PrecisionError
from .levy_model import ModelParams, RootSet, laplace_exponent, psi_roots

X_MAX = 40.0


class QScalePair:
    """Callable views W, W', Z of the q-scale functions of ``params``."""

    def __init__(self, params: ModelParams, q: float, rootset: RootSet | None = None):
        self.params = params
        self.q = float(q)
        self.rootset = rootset if rootset is not None else psi_roots(q, params)
        self._g = self.rootset.gammas
        self._u = self.rootset.weights

    @property
    def phi_q(self) -> float:
        return self.rootset.phi_q

    def _terms(self, x):
        x = np.asarray(x, dtype=float)
        xc = np.clip(x, 0.0, X_MAX)
        return x, np.exp(np.multiply.outer(xc, self._g))

    def W(self, x):
        x, e = self._terms(x)
        return np.where(x < 0, 0.0, e @ self._u)

    def W_prime(self, x):
        x, e = self._terms(x)
        return np.where(x < 0, 0.0, e @ (self._u * self._g))

    def W_second(self, x):
        x, e = self._terms(x)
        return np.where(x < 0, 0.0, e @ (self._u * self._g**2))

    def W_scaled(self, x):
        """W(x) * exp(-Phi(q) x); finite where W itself would overflow."""
        x = np.asarray(x, dtype=float)
        xc = np.maximum(x, 0.0)
        e = np.exp(np.multiply.outer(xc, self._g - self.phi_q))
        return np.where(x < 0, 0.0, e @ self._u)

    def Z(self, x):
        x = np.asarray(x, dtype=float)
        if self.q == 0:
            return np.ones_like(x)
        xc = np.clip(x, 0.0, X_MAX)
        total = np.zeros_like(xc)
        for g, u in zip(self._g, self._u):
            if g == 0.0:
                total = total + u * xc
            else:
                total = total + u * np.expm1(g * xc) / g
        return np.where(x < 0, 1.0, 1.0 + self.q * total)

    def Z_prime(self, x):
        return self.q * self.W(x)

    def _sub_dominant(self, x, coef):
        """sum over the roots other than Phi(q) of coef_i exp(gamma_i x).

        Combinations that annihilate the exp(Phi(q) x) term are evaluated
        this way so they stay finite at large x.
        """
        x = np.asarray(x, dtype=float)
        keep = np.arange(self._g.size) != int(np.argmax(self._g))
        e = np.exp(np.multiply.outer(np.maximum(x, 0.0), self._g[keep]))
        return x, e @ np.asarray(coef, dtype=float)[keep]

    def exit_value(self, x):
        """Z(x) - q/Phi(q) W(x), the transform of the first passage below 0."""
        x = np.asarray(x, dtype=float)
        if self.q == 0 or self.phi_q == 0:
            return np.where(x < 0, 1.0, self.Z(x))
        g, u, q, big = self._g, self._u, self.q, self.phi_q
        const = 1.0 - q * np.sum(u / g)
        x, tail = self._sub_dominant(x, q * u * (1.0 / g - 1.0 / big))
        return np.where(x < 0, 1.0, const + tail)

    def exit_value_prime(self, x):
        if self.q == 0 or self.phi_q == 0:
            return self.Z_prime(x)
        g, u = self._g, self._u
        x, tail = self._sub_dominant(x, self.q * u * (1.0 - g / self.phi_q))
        return np.where(x < 0, 0.0, tail)

    def creeping(self, x, sigma: float):
        """sigma^2/2 (W'(x) - Phi(q) W(x))."""
        x, tail = self._sub_dominant(x, self._u * (self._g - self.phi_q))
        return np.where(x < 0, 0.0, 0.5 * sigma**2 * tail)

    def creeping_prime(self, x, sigma: float):
        x, tail = self._sub_dominant(x, self._u * self._g * (self._g - self.phi_q))
        return np.where(x < 0, 0.0, 0.5 * sigma**2 * tail)

    def partial_fractions(self, theta):
        """sum_i Upsilon_i / (theta - gamma_i), the transform of W term by term."""
        theta = np.asarray(theta, dtype=float)
        return np.sum(self._u / (np.subtract.outer(theta, self._g)), axis=-1)


def w_q(x, pair: QScalePair):
    return pair.W(x)


def z_q(x, pair: QScalePair):
    return pair.Z(x)


def w_q_prime(x, pair: QScalePair):
    return pair.W_prime(x)


def laplace_check(theta: float, pair: QScalePair, cut: float = 30.0) -> float:
    """Numerical Laplace transform of W^(q) at ``theta`` minus 1/(psi(theta) - q)."""
    if theta <= pair.phi_q + 1e-3:
        raise PrecisionError(f"theta={theta} too close to Phi(q)={pair.phi_q}")
    if theta <= 0:
        raise DomainError("theta must be positive")
    cut = min(cut, 700.0 / theta)
    body, _ = integrate.quad(
        lambda x: np.exp(-theta * x) * float(pair.W(x)), 0.0, cut, limit=400, epsabs=1e-13, epsrel=1e-12
    )
    g, u = pair._g, pair._u
    tail = float(np.sum(u * np.exp((g - theta) * cut) / (theta - g)))
    return body + tail - 1.0 / (laplace_exponent(theta, pair.params) - pair.q)
