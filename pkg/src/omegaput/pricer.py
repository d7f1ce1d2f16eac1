"""Value function of the perpetual put with asset-dependent discounting.

For a threshold u and y = log(s/u) > 0 the stopping value v(s, u) splits into
the jump exit (overshoot below u, mean exit price u*phi/(phi+1)) and the
creeping exit (S hits u exactly, sigma > 0 only):

    v = (K - u phi/(phi+1)) (E_u(y) - L_u(y)) + (K - u) L_u(y)

where E_u = Z - c W is the total exit functional and L_u the creeping part,
L_u(y) = lim_alpha e^{alpha y} (Z_alpha - c_alpha W_alpha)(y), recovered
exactly from any finite alpha by an overshoot correction.  With sigma = 0,
L = 0; with lam = 0, L = E.  V(s) = sup_u v(s, u), attained at u*.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import BoundarySearchError, DomainError
from .levy_model import ModelParams
from .omega_scale import DiscountFunction, OmegaScaleSolution, build_ode, exp_shift_ode, solve_to_plateau
from .scale_classic import QScalePair

log = logging.getLogger(__name__)

__all__ = [
    "AlphaSchedule",
    "SolverSettings",
    "PricingMachinery",
    "ValueCurve",
    "candidate_value",
    "alpha_limit_term",
    "overshoot_correct",
    "optimize_boundary",
    "value_curve",
    "golden_section_max",
    "boundary_pasting",
    "fit_residual",
]

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class AlphaSchedule:
    levels: tuple = (10.0, 20.0, 50.0, 150.0)
    stabilization_tol: float = 5e-3

    def __post_init__(self):
        lv = tuple(float(a) for a in self.levels)
        if not lv:
            raise DomainError("alpha schedule needs at least one level")
        if any(b <= a for a, b in zip(lv, lv[1:])) or lv[0] <= 0:
            raise DomainError("alpha levels must be positive and strictly increasing")
        object.__setattr__(self, "levels", lv)


@dataclass(frozen=True)
class SolverSettings:
    step: float = 0.05
    taylor_order: int = 16
    c_tol: float = 1e-9
    x_cap: float = 20.0


@dataclass
class AlphaLimit:
    """Creeping term estimate with the per-level values it was built from."""

    value: float
    raw: dict
    extrapolated: list
    stabilized: bool


def neville_at_zero(t: Sequence[float], f: Sequence[float]) -> list:
    """Polynomial extrapolants to t = 0 through the first k+1 points, k = 0.."""
    t = list(t)
    out = []
    for k in range(1, len(t) + 1):
        p = list(f[:k])
        for m in range(1, k):
            for i in range(k - m):
                p[i] = (t[i + m] * p[i] - t[i] * p[i + 1]) / (t[i + m] - t[i])
        out.append(p[0])
    return out


class PricingMachinery:
    """Scale-function machinery for one model and discount, cached per level u.

    ``alpha`` selects how the creeping term is evaluated in the full regime
    with non-constant discount: ``None`` runs the alpha schedule (combined
    according to ``alpha_method``), a number returns the raw term at that
    single level.
    """

    def __init__(self, params: ModelParams, discount: DiscountFunction, settings: SolverSettings | None = None,
                 schedule: AlphaSchedule | None = None, alpha: float | None = None,
                 alpha_method: str = "overshoot"):
        self.params = params
        self.discount = discount
        self.settings = settings or SolverSettings()
        self.schedule = schedule or AlphaSchedule()
        self.alpha = alpha
        if alpha_method not in ALPHA_METHODS:
            raise DomainError(f"unknown alpha method {alpha_method!r}")
        self.alpha_method = alpha_method
        self.regime = params.regime
        self._exit: dict = {}
        self._tilted: dict = {}
        self.flags: list[str] = []
        if discount.is_constant:
            self._classic = QScalePair(params, discount.q)
            q, phi_q = discount.q, self._classic.phi_q
            self._c_const = q / phi_q if phi_q > 0 else 0.0

    @property
    def K(self) -> float:
        return self.params.K

    # -- exit functional E_u = Z - c W -------------------------------------------------

    def exit_solution(self, u: float) -> OmegaScaleSolution:
        sol = self._exit.get(u)
        if sol is None:
            st = self.settings
            spec = build_ode(self.discount, self.params, 0.0, u)
            sol = solve_to_plateau(spec, st.step, st.taylor_order, st.c_tol, x_cap=st.x_cap, x_min=self._y_needed(u))
            self._exit[u] = sol
        return sol

    def _y_needed(self, u: float) -> float:
        return max(0.0, math.log(max(self.y_span_s, u) / u)) + 0.1

    y_span_s: float = 0.0

    def exit_transform(self, y, u: float):
        y = np.asarray(y, dtype=float)
        if self.discount.is_constant:
            return self._classic.exit_value(y)
        return self.exit_solution(u).exit_value(y)

    def exit_transform_dy(self, y, u: float):
        y = np.asarray(y, dtype=float)
        if self.discount.is_constant:
            return self._classic.exit_value_prime(y)
        return self.exit_solution(u).exit_value_prime(y)

    # -- creeping term L_u ---------------------------------------------------------------

    def tilted_solution(self, u: float, alpha: float) -> OmegaScaleSolution:
        key = (u, alpha)
        sol = self._tilted.get(key)
        if sol is None:
            st = self.settings
            spec = exp_shift_ode(build_ode(self.discount, self.params, alpha, u), alpha)
            sol = solve_to_plateau(spec, st.step, st.taylor_order, st.c_tol, x_cap=st.x_cap, x_min=self._y_needed(u))
            self._tilted[key] = sol
        return sol

    def creeping_at_alpha(self, y, u: float, alpha: float):
        """e^{alpha y} (Z_alpha - c_alpha W_alpha)(y) from the e^{alpha x}-shifted ODE."""
        return self.tilted_solution(u, alpha).exit_value(y)

    def creeping_at_alpha_dy(self, y, u: float, alpha: float):
        return self.tilted_solution(u, alpha).exit_value_prime(y)

    def creeping_closed(self, y):
        """sigma^2/2 (W^(q)' - Phi(q) W^(q))(y) for constant discount q."""
        return self._classic.creeping(y, self.params.sigma)

    def creeping_term(self, y, u: float):
        y = np.asarray(y, dtype=float)
        if self.regime == "sigma0":
            return np.zeros_like(y)
        if self.discount.is_constant:
            return self.creeping_closed(y)
        if self.regime == "lambda0":
            return self.exit_transform(y, u)
        if self.alpha is not None:
            return self.creeping_at_alpha(y, u, self.alpha)
        return alpha_limit_term(y, u, self.schedule, self, self.alpha_method).value

    def creeping_term_dy(self, y, u: float):
        y = np.asarray(y, dtype=float)
        if self.regime == "sigma0":
            return np.zeros_like(y)
        if self.discount.is_constant:
            return self._classic.creeping_prime(y, self.params.sigma)
        if self.regime == "lambda0":
            return self.exit_transform_dy(y, u)
        if self.alpha is not None:
            return self.creeping_at_alpha_dy(y, u, self.alpha)
        levels = self.schedule.levels
        vals = [self.creeping_at_alpha_dy(y, u, a) for a in levels]
        if self.alpha_method == "overshoot":
            return overshoot_correct(vals[-1], self.exit_transform_dy(y, u), levels[-1], self.params.phi)
        if self.alpha_method == "raw":
            return vals[-1]
        return neville_at_zero([1.0 / a for a in levels], vals)[-1]


def overshoot_correct(raw, exit_total, alpha: float, phi: float):
    """Remove the jump-exit share from a single-level creeping term.

    At level alpha the tilted term equals L + phi/(phi + alpha) (E - L): a jump
    below the barrier overshoots by an Exp(phi) amount independent of the path
    before the jump, and the tilt weights it by E[e^{-alpha O}].  Solving for L
    gives an exact expression at every alpha.
    """
    return ((phi + alpha) * raw - phi * exit_total) / alpha


ALPHA_METHODS = ("overshoot", "extrapolate", "raw")


def alpha_limit_term(y, u: float, schedule: AlphaSchedule, machinery: PricingMachinery,
                     method: str = "overshoot") -> AlphaLimit:
    """Creeping term L_u(y) from the alpha schedule.

    ``method`` chooses how the levels become one number:

    overshoot    each level is corrected by ``overshoot_correct``; the levels
                 then agree up to rounding and the last one is returned
    extrapolate  Neville extrapolation of the raw levels to 1/alpha = 0
    raw          the raw value at the last level; carries a bias of
                 phi/(phi + alpha) times the jump-exit part

    Stabilization compares the last two per-level estimates.
    """
    if machinery.params.sigma <= 0:
        raise DomainError("creeping term needs sigma > 0")
    if method not in ALPHA_METHODS:
        raise DomainError(f"unknown alpha method {method!r}")
    y = np.asarray(y, dtype=float)
    levels = schedule.levels
    raw = {a: machinery.creeping_at_alpha(y, u, a) for a in levels}
    if method == "overshoot":
        E = machinery.exit_transform(y, u)
        est = [overshoot_correct(raw[a], E, a, machinery.params.phi) for a in levels]
    elif method == "extrapolate":
        est = neville_at_zero([1.0 / a for a in levels], [raw[a] for a in levels])
    else:
        est = [raw[a] for a in levels]
    if len(est) == 1:
        stabilized = False
    else:
        denom = np.maximum(np.abs(est[-1]), 1e-300)
        stabilized = bool(np.all(np.abs(est[-1] - est[-2]) / denom < schedule.stabilization_tol))
    if not stabilized:
        log.debug("alpha schedule not stabilized at u=%g", u)
    return AlphaLimit(est[-1], raw, est, stabilized)


def candidate_value(s, u: float, machinery: PricingMachinery, clip: bool = True):
    """v(s, u): value of stopping at the first entry of S into (0, u]."""
    p = machinery.params
    K = p.K
    s = np.atleast_1d(np.asarray(s, dtype=float))
    out = K - s
    cont = s > u
    if np.any(cont):
        y = np.log(s[cont] / u)
        E = machinery.exit_transform(y, u)
        if machinery.regime == "sigma0":
            v = (K - u * p.phi / (p.phi + 1.0)) * E
        elif machinery.regime == "lambda0":
            v = (K - u) * machinery.creeping_term(y, u)
        else:
            L = machinery.creeping_term(y, u)
            v = (K - u * p.phi / (p.phi + 1.0)) * (E - L) + (K - u) * L
        if clip and np.any(v < 0):
            machinery.flags.append(f"negative candidate clipped at u={u:.6g}")
            v = np.maximum(v, 0.0)
        out[cont] = v
    return out


def candidate_slope_at_boundary(u: float, machinery: PricingMachinery) -> float:
    """dv/ds at s = u+ (right derivative)."""
    p = machinery.params
    K = p.K
    y0 = np.array([0.0])
    dE = float(machinery.exit_transform_dy(y0, u)[0])
    if machinery.regime == "sigma0":
        dv = (K - u * p.phi / (p.phi + 1.0)) * dE
    elif machinery.regime == "lambda0":
        dv = (K - u) * float(machinery.creeping_term_dy(y0, u)[0])
    else:
        dL = float(np.asarray(machinery.creeping_term_dy(y0, u))[0])
        dv = (K - u * p.phi / (p.phi + 1.0)) * (dE - dL) + (K - u) * dL
    return dv / u


def boundary_pasting(u: float, machinery: PricingMachinery) -> float:
    """|v(u+, u) - (K - u)|, the continuation formula evaluated at y = 0."""
    p = machinery.params
    K = p.K
    y0 = np.array([0.0])
    E = float(machinery.exit_transform(y0, u)[0])
    if machinery.regime == "sigma0":
        v = (K - u * p.phi / (p.phi + 1.0)) * E
    else:
        L = float(np.asarray(machinery.creeping_term(y0, u))[0])
        v = (K - u) * L if machinery.regime == "lambda0" else (K - u * p.phi / (p.phi + 1.0)) * (E - L) + (K - u) * L
    return abs(v - (K - u))


def golden_section_max(f, a: float, b: float, tol: float):
    """Maximizer of a unimodal f on [a, b] to within tol."""
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def fit_residual(u: float, machinery: PricingMachinery) -> float:
    p = machinery.params
    if p.sigma > 0:
        return abs(candidate_slope_at_boundary(u, machinery) + 1.0)
    above = float(candidate_value(u * (1.0 + 1e-12), u, machinery)[0])
    return abs(above - (p.K - u))


def optimize_boundary(s_ref: float, machinery: PricingMachinery, n_coarse: int = 64, rel_tol: float = 1e-6,
                      check_s: float | None = None):
    """u* maximizing u -> v(s_ref, u); returns (u_star, fit_residual, table).

    ``table`` holds the coarse scan (u, v(s_ref, u)).  When ``check_s`` is
    given the maximization is repeated there and u* must agree to 1e-4 K.
    """
    K = machinery.K
    eps = 1e-3 * K
    # geometric spacing resolves boundaries far below K as well as near it
    us = np.geomspace(eps, min(K, s_ref) - eps, n_coarse)

    def f(u):
        return float(candidate_value(s_ref, float(u), machinery)[0])

    vals = np.array([f(u) for u in us])
    i = int(np.argmax(vals))
    if i == len(us) - 1 or i == 0:
        raise BoundarySearchError(f"maximizer at bracket edge u={us[i]:.6g}")
    # the smooth-fit slope varies like 1/u, so the tolerance scales with u
    u_star = golden_section_max(f, us[i - 1], us[i + 1], rel_tol * min(K, us[i]))
    if check_s is not None:
        u_chk, _, _ = optimize_boundary(check_s, machinery, n_coarse, rel_tol)
        if abs(u_chk - u_star) > 1e-4 * K:
            raise BoundarySearchError(f"u* depends on s_ref: {u_star:.8g} vs {u_chk:.8g}")
    return u_star, fit_residual(u_star, machinery), np.column_stack([us, vals])


@dataclass
class ValueCurve:
    s_grid: np.ndarray
    values: np.ndarray
    u_star: float
    fit_residual: float
    regime: str
    per_u: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    payoff: Optional[np.ndarray] = None
    flags: list = field(default_factory=list)


def value_curve(s_grid, machinery: PricingMachinery, s_ref: float | None = None, check_s: float | None = None,
                n_coarse: int = 64) -> ValueCurve:
    """u* at s_ref (default K), then V on the grid."""
    K = machinery.K
    s_grid = np.asarray(s_grid, dtype=float)
    machinery.y_span_s = max(machinery.y_span_s, float(s_grid.max()), check_s or 0.0)
    s_ref = K if s_ref is None else s_ref
    u_star, resid, table = optimize_boundary(s_ref, machinery, n_coarse, check_s=check_s)
    values = candidate_value(s_grid, u_star, machinery)
    return ValueCurve(
        s_grid=s_grid,
        values=values,
        u_star=u_star,
        fit_residual=resid,
        regime=machinery.regime,
        per_u=table,
        payoff=np.maximum(K - s_grid, 0.0),
        flags=list(machinery.flags),
    )
