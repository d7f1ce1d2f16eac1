"""Levy model: parameters, Laplace exponent, its roots and the Esscher tilt.

The log-price is X_t = zeta*t + sigma*B_t - sum_{i<=N_t} Y_i with N a Poisson
process of rate ``lam`` and Y_i ~ Exp(phi).  Its Laplace exponent is

    psi(theta) = zeta*theta + sigma^2 theta^2 / 2 - lam*theta / (phi + theta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import DegenerateRootsError, DomainError

__all__ = [
    "ModelParams",
    "RootSet",
    "laplace_exponent",
    "laplace_exponent_deriv",
    "psi_roots",
    "tilt",
]


@dataclass(frozen=True)
class ModelParams:
    """Market and model parameters.

    ``zeta`` defaults to the martingale drift r - sigma^2/2 + lam/(phi+1).
    Tilted parameter sets carry an explicit ``zeta``.
    """

    r: float
    sigma: float
    lam: float
    phi: float = 1.0
    K: float = 1.0
    zeta: Optional[float] = field(default=None)

    def __post_init__(self):
        if not self.r > 0:
            raise DomainError(f"r must be positive, got {self.r}")
        if self.sigma < 0 or self.lam < 0:
            raise DomainError("sigma and lam must be nonnegative")
        if self.sigma == 0 and self.lam == 0:
            raise DomainError("sigma = lam = 0 gives a deterministic model")
        if not self.phi > 0:
            raise DomainError(f"phi must be positive, got {self.phi}")
        if not self.K > 0:
            raise DomainError(f"K must be positive, got {self.K}")
        if self.zeta is None:
            drift = self.r - 0.5 * self.sigma**2 + self.lam / (self.phi + 1.0)
            object.__setattr__(self, "zeta", drift)

    @property
    def regime(self) -> str:
        if self.sigma == 0:
            return "sigma0"
        if self.lam == 0:
            return "lambda0"
        return "full"

    @property
    def n_roots(self) -> int:
        return 3 if self.regime == "full" else 2


@dataclass(frozen=True)
class RootSet:
    """Real solutions of psi(theta) = q with residues 1/psi'(theta)."""

    q: float
    roots: tuple
    phi_q: float
    upsilons: tuple

    @property
    def gammas(self) -> np.ndarray:
        return np.asarray(self.roots, dtype=float)

    @property
    def weights(self) -> np.ndarray:
        return np.asarray(self.upsilons, dtype=float)


def laplace_exponent(theta: float, params: ModelParams) -> float:
    if params.lam > 0 and theta == -params.phi:
        raise DomainError("theta = -phi is a pole of the Laplace exponent")
    value = params.zeta * theta + 0.5 * params.sigma**2 * theta**2
    if params.lam > 0:
        value -= params.lam * theta / (params.phi + theta)
    return value


def laplace_exponent_deriv(theta: float, params: ModelParams) -> float:
    if params.lam > 0 and theta == -params.phi:
        raise DomainError("theta = -phi is a pole of the Laplace exponent")
    value = params.zeta + params.sigma**2 * theta
    if params.lam > 0:
        value -= params.lam * params.phi / (params.phi + theta) ** 2
    return value


def _cleared_polynomial(q: float, p: ModelParams) -> np.ndarray:
    """Coefficients (highest first) of (psi(theta) - q) * (phi + theta), or of
    psi(theta) - q itself when there are no jumps."""
    half_var = 0.5 * p.sigma**2
    if p.lam == 0:
        return np.array([half_var, p.zeta, -q])
    # half_var*th^2*(phi+th) + zeta*th*(phi+th) - lam*th - q*(phi+th)
    return np.array(
        [
            half_var,
            half_var * p.phi + p.zeta,
            p.zeta * p.phi - p.lam - q,
            -q * p.phi,
        ]
    )


def _newton(theta: float, q: float, p: ModelParams, steps: int = 2) -> float:
    for _ in range(steps):
        d = laplace_exponent_deriv(theta, p)
        if d == 0 or not math.isfinite(d):
            break
        theta -= (laplace_exponent(theta, p) - q) / d
    return theta


def psi_roots(q: float, params: ModelParams) -> RootSet:
    """All real roots of psi(theta) = q.

    For q = 0 the zero root is listed first and the rest ascend; otherwise
    roots ascend, so the last one is Phi(q).
    """
    if q < 0:
        raise DomainError(f"q must be nonnegative, got {q}")
    coeffs = _cleared_polynomial(q, params)
    while coeffs[0] == 0:
        coeffs = coeffs[1:]
    raw = np.roots(coeffs)
    scale = max(1.0, float(np.max(np.abs(raw))))
    if np.any(np.abs(raw.imag) > 1e-9 * scale):
        raise DegenerateRootsError(f"complex or repeated roots for q={q}: {raw}")
    real = np.sort(raw.real)
    if real.size > 1 and np.min(np.diff(real)) < 1e-7 * scale:
        raise DegenerateRootsError(f"repeated root of psi(theta) = {q}: {real}")

    roots = []
    for th in real:
        if q == 0 and abs(th) < 1e-9 * scale:
            roots.append(0.0)
        else:
            roots.append(_newton(float(th), q, params))
    if q == 0:
        rest = sorted(t for t in roots if t != 0.0)
        roots = [0.0] + rest
    else:
        roots = sorted(roots)
    for th in roots:
        if params.lam > 0 and th == -params.phi:
            raise DegenerateRootsError("root on the pole theta = -phi")
    upsilons = tuple(1.0 / laplace_exponent_deriv(th, params) for th in roots)
    nonneg = [t for t in roots if t >= 0]
    return RootSet(q=q, roots=tuple(roots), phi_q=max(nonneg), upsilons=upsilons)


def tilt(params: ModelParams, alpha: float) -> ModelParams:
    """Parameters of X under the exponentially tilted measure P^(alpha)."""
    if alpha < 0:
        raise DomainError(f"alpha must be nonnegative, got {alpha}")
    if alpha == 0:
        return params
    return replace(
        params,
        zeta=params.zeta + params.sigma**2 * alpha,
        lam=params.lam * params.phi / (params.phi + alpha),
        phi=params.phi + alpha,
    )
