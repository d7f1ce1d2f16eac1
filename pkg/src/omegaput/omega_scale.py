"""Omega-scale functions by ODE integration and by a Volterra renewal solver.

For a rate function xi(x) the omega-scale functions solve

    W_xi(x) = W(x) + int_0^x W(x - y) xi(y) W_xi(y) dy,
    Z_xi(x) = 1    + int_0^x W(x - y) xi(y) Z_xi(y) dy,

with W the zero-scale function of the model.  For exponential jumps both are
solutions of one linear ODE (order 2 when sigma = 0 or lam = 0, order 3
otherwise) whose coefficients are affine in xi and xi'.  The production path
integrates that ODE with a Taylor-series method; the Volterra solver is an
independent check.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConvergenceError, DomainError, IntegrationError
from .levy_model import ModelParams, laplace_exponent, psi_roots, tilt
from .scale_classic import QScalePair

__all__ = [
    "DiscountFunction",
    "OdeSpec",
    "OmegaScaleSolution",
    "TaylorIntegrator",
    "build_ode",
    "exp_shift_ode",
    "taylor_integrate",
    "volterra_solve",
    "c_ratio_limit",
    "solve_to_plateau",
]

KINDS = ("constant", "linear", "power", "arctan", "sqrt_shift")

C_X_MAX = 20.0
C_WINDOW = 2.0
C_TOL = 1e-6


# --- discount functions ----------------------------------------------------------


@dataclass(frozen=True)
class DiscountFunction:
    """omega(s) for one of the supported shapes.

    constant: q;  linear: C s;  power: C s^n;  arctan: C arctan(s);
    sqrt_shift: C sqrt(s) + Z.
    """

    kind: str
    C: float = 0.0
    q: float = 0.0
    n: float = 1.0
    Z: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown discount kind {self.kind!r}")
        if self.kind == "constant":
            if self.q < 0:
                raise DomainError("constant discount must be nonnegative")
        elif not self.C > 0:
            raise DomainError("C must be positive")
        if self.kind == "power" and not 0 < self.n <= 1:
            raise DomainError("power exponent n must lie in (0, 1]")
        if self.Z < 0:
            raise DomainError("shift Z must be nonnegative")
        self._check_shape()

    def _check_shape(self):
        s = np.geomspace(1e-3, 1e3, 61)
        w = self.omega(s)
        if np.any(np.diff(w) < -1e-12 * np.abs(w[1:]).max()):
            raise DomainError("discount function must be nondecreasing")
        # concavity on a uniform sub-grid
        su = np.linspace(1e-3, 50.0, 101)
        wu = self.omega(su)
        if np.any(np.diff(wu, 2) > 1e-9 * max(1.0, np.abs(wu).max())):
            raise DomainError("discount function must be concave")

    @property
    def lower_bound(self) -> float:
        if self.kind == "constant":
            return self.q
        if self.kind == "sqrt_shift":
            return self.Z
        return 0.0

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant"

    def omega(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "constant":
            return np.full_like(s, self.q)
        if self.kind == "linear":
            return self.C * s
        if self.kind == "power":
            return self.C * s**self.n
        if self.kind == "arctan":
            return self.C * np.arctan(s)
        return self.C * np.sqrt(s) + self.Z

    def xi(self, x, u: float = 1.0, shift: float = 0.0):
        """omega(u e^x) - shift."""
        return self.omega(u * np.exp(np.asarray(x, dtype=float))) - shift

    def xi_prime(self, x, u: float = 1.0):
        x = np.asarray(x, dtype=float)
        s = u * np.exp(x)
        if self.kind == "constant":
            return np.zeros_like(x)
        if self.kind == "linear":
            return self.C * s
        if self.kind == "power":
            return self.C * self.n * s**self.n
        if self.kind == "arctan":
            return self.C * s / (1.0 + s * s)
        return 0.5 * self.C * np.sqrt(s)

    def xi_series(self, x0: float, u: float, order: int, shift: float = 0.0) -> np.ndarray:
        """Taylor coefficients c_j of omega(u e^{x0 + h}) - shift in powers of h."""
        j = np.arange(order + 1)
        fact = np.array([math.factorial(k) for k in j], dtype=float)
        out = np.zeros(order + 1)
        s0 = u * math.exp(x0)
        if self.kind == "constant":
            out[0] = self.q
        elif self.kind == "linear":
            out[:] = self.C * s0 / fact
        elif self.kind in ("power", "sqrt_shift"):
            n = self.n if self.kind == "power" else 0.5
            out[:] = self.C * s0**n * n**j / fact
            out[0] += self.Z if self.kind == "sqrt_shift" else 0.0
        else:
            out[:] = self.C * _arctan_exp_series(s0, order)
        out[0] -= shift
        return out


def _arctan_exp_series(s0: float, order: int) -> np.ndarray:
    """Taylor coefficients of arctan(s0 e^h): solve (1 + w^2) y' = w' by series division."""
    j = np.arange(order + 1)
    w = s0 / np.array([math.factorial(k) for k in j], dtype=float)
    denom = np.convolve(w, w)[: order + 1]
    denom[0] += 1.0
    dw = w[1:] * np.arange(1, order + 1)  # series of w'
    dy = np.zeros(order)
    for k in range(order):
        acc = dw[k] - np.dot(denom[1 : k + 1], dy[k - 1 :: -1][:k]) if k else dw[0]
        dy[k] = acc / denom[0]
    y = np.empty(order + 1)
    y[0] = math.atan(s0)
    y[1:] = dy / np.arange(1, order + 1)
    return y


# --- ODE specification -------------------------------------------------------------


@dataclass
class OdeSpec:
    """f^(m) = sum_k a_k(x) f^(k) with a_k = const + c_xi*xi(x) + c_dxi*xi'(x).

    ``coeffs`` has shape (m, 3); ``ic_w``/``ic_z`` hold f(0), ..., f^(m-1)(0).
    """

    order: int
    coeffs: np.ndarray
    ic_w: np.ndarray
    ic_z: np.ndarray
    discount: DiscountFunction
    u: float = 1.0
    shift: float = 0.0
    alpha: float = 0.0
    exp_shift: float = 0.0
    roots: tuple = ()
    upsilons: tuple = ()

    def xi_series(self, x0: float, order: int) -> np.ndarray:
        return self.discount.xi_series(x0, self.u, order, self.shift)

    def xi0(self) -> float:
        return float(self.discount.xi(0.0, self.u, self.shift))

    def coefficients_at(self, x: float) -> np.ndarray:
        xi = float(self.discount.xi(x, self.u, self.shift))
        dxi = float(self.discount.xi_prime(x, self.u))
        return self.coeffs @ np.array([1.0, xi, dxi])


def build_ode(discount: DiscountFunction, params: ModelParams, alpha: float = 0.0, u: float = 1.0) -> OdeSpec:
    """ODE satisfied by the omega-scale functions of xi(x) = omega(u e^x) - psi(alpha)
    under the alpha-tilted model."""
    if not u > 0:
        raise DomainError("level u must be positive")
    tp = tilt(params, alpha)
    rs = psi_roots(0.0, tp)
    shift = laplace_exponent(alpha, params) if alpha else 0.0
    xi0 = float(discount.xi(0.0, u, shift))
    g, ups = rs.roots, rs.upsilons
    if tp.n_roots == 2:
        g2 = g[1]
        u1, u2 = ups
        s12 = u1 + u2
        coeffs = np.array([[0.0, -u1 * g2, s12], [g2, s12, 0.0]])
        ic_w = np.array([s12, u2 * g2 + s12**2 * xi0])
        ic_z = np.array([1.0, s12 * xi0])
        order = 2
    else:
        g2, g3 = g[1], g[2]
        u1, u2, u3 = ups
        p = u2 * (g2 - g3) - u1 * g3
        coeffs = np.array([[0.0, u1 * g2 * g3, p], [-g2 * g3, p, 0.0], [g2 + g3, 0.0, 0.0]])
        ic_w = np.array([0.0, u2 * g2 + u3 * g3, u2 * g2**2 + u3 * g3**2])
        ic_z = np.array([1.0, 0.0, xi0 * p])
        order = 3
    return OdeSpec(order, coeffs, ic_w, ic_z, discount, u, shift, alpha, 0.0, tuple(g), tuple(ups))


def exp_shift_ode(spec: OdeSpec, beta: float) -> OdeSpec:
    """ODE and initial values for g(x) = e^{beta x} f(x)."""
    m = spec.order
    nb = -beta
    new = np.zeros_like(spec.coeffs)
    for j in range(m):
        for k in range(j, m):
            new[j] += spec.coeffs[k] * math.comb(k, j) * nb ** (k - j)
        new[j, 0] -= math.comb(m, j) * nb ** (m - j)

    def lift(ic):
        return np.array([sum(math.comb(k, j) * beta ** (k - j) * ic[j] for j in range(k + 1)) for k in range(m)])

    return OdeSpec(
        m, new, lift(spec.ic_w), lift(spec.ic_z), spec.discount, spec.u, spec.shift,
        spec.alpha, spec.exp_shift + beta, spec.roots, spec.upsilons,
    )


# --- Taylor integrator ---------------------------------------------------------------


def _rising_table(p: int, m: int) -> np.ndarray:
    """R[n, k] = (n + k)! / n!."""
    R = np.ones((p + 1, m + 1))
    for n in range(p + 1):
        for k in range(m + 1):
            R[n, k] = math.factorial(n + k) / math.factorial(n)
    return R


class TaylorIntegrator:
    """Higher-order Taylor marching for the W- and Z-problems of an OdeSpec.

    The step is the requested one, shortened so that the fastest
    frozen-coefficient mode rho satisfies (rho h)^(p+1)/(p+1)! <= local_tol.
    Stiff decaying modes otherwise leak truncation error into the dominant one.
    Both solutions are rescaled jointly by e^{-m} when they leave
    [1e-200, 1e200]; ratios and the combination Z - cW are unaffected.
    """

    def __init__(self, spec: OdeSpec, step: float = 0.05, taylor_order: int = 8,
                 stability: float = 2.0, rescale_at: float = 1e200, local_tol: float = 1e-15):
        if not 0 < step <= 1.0:
            raise DomainError(f"step must lie in (0, 1], got {step}")
        if taylor_order < 4 or taylor_order > 30:
            raise DomainError(f"taylor_order must lie in [4, 30], got {taylor_order}")
        if taylor_order < spec.order:
            raise DomainError("taylor_order below ODE order")
        self.spec = spec
        self.step = step
        self.p = taylor_order
        self.zcap = min(stability, (local_tol * math.factorial(taylor_order + 1)) ** (1.0 / (taylor_order + 1)))
        self.rescale_at = rescale_at
        m = spec.order
        self._R = _rising_table(self.p, m)
        self._fact = np.array([math.factorial(k) for k in range(self.p + 1)], dtype=float)
        self.x = 0.0
        self.state = np.vstack([spec.ic_w, spec.ic_z]).astype(float)
        self.log_scale = 0.0
        self.nodes: list[float] = []
        self.polys: list[np.ndarray] = []
        self.logs: list[float] = []

    def _series_coeffs(self, x0: float) -> np.ndarray:
        p = self.p
        xs = self.spec.xi_series(x0, p + 1)
        dxs = xs[1:] * np.arange(1, p + 2)
        a = np.outer(self.spec.coeffs[:, 1], xs[: p + 1]) + np.outer(self.spec.coeffs[:, 2], dxs)
        a[:, 0] += self.spec.coeffs[:, 0]
        return a

    def _taylor(self, a: np.ndarray) -> np.ndarray:
        m, p, R = self.spec.order, self.p, self._R
        T = np.zeros((2, p + 1))
        T[:, :m] = self.state / self._fact[:m]
        for j in range(p - m + 1):
            acc = np.zeros(2)
            for k in range(m):
                w = a[k, : j + 1] * R[j::-1, k]
                acc += T[:, k : j + k + 1][:, ::-1] @ w
            T[:, j + m] = acc / R[j, m]
        return T

    def _mode_radius(self, a0: np.ndarray) -> float:
        m = self.spec.order
        poly = np.concatenate([[1.0], -a0[::-1]])
        return float(np.max(np.abs(np.roots(poly)))) if m else 0.0

    def advance_to(self, x_end: float) -> None:
        m, p = self.spec.order, self.p
        powers = np.arange(p + 1)
        while self.x < x_end - 1e-14:
            a = self._series_coeffs(self.x)
            rho = self._mode_radius(a[:, 0])
            h = min(self.step, x_end - self.x)
            if rho * h > self.zcap:
                h = self.zcap / rho
            T = self._taylor(a)
            self.nodes.append(self.x)
            self.polys.append(T)
            self.logs.append(self.log_scale)
            hp = h**powers
            new = np.empty_like(self.state)
            for k in range(m):
                new[:, k] = T[:, k:] @ (self._R[: p + 1 - k, k] * hp[: p + 1 - k])
            if not np.all(np.isfinite(new)):
                raise IntegrationError(f"non-finite state at x={self.x + h:.6g}", last_good_x=self.x)
            big = np.max(np.abs(new))
            if big > self.rescale_at or 0 < big < 1.0 / self.rescale_at:
                shift = math.log(big)
                new /= big
                self.log_scale += shift
            self.state = new
            self.x += h

    def evaluate(self, x, deriv: int = 0, scaled: bool = False):
        """Values (or derivatives) of (W, Z) at points x; shape (2, len(x))."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        nodes = np.asarray(self.nodes)
        if np.any(x < -1e-12) or np.any(x > self.x + 1e-9):
            raise DomainError(f"evaluation outside [0, {self.x}]")
        idx = np.clip(np.searchsorted(nodes, x, side="right") - 1, 0, len(nodes) - 1)
        polys = np.asarray(self.polys)[idx]  # (n, 2, p+1)
        h = x - nodes[idx]
        p = self.p
        kk = np.arange(deriv, p + 1)
        w = self._R[: p + 1 - deriv, deriv][None, :] * h[:, None] ** (kk - deriv)[None, :]
        vals = np.einsum("nsj,nj->sn", polys[:, :, deriv:], w)
        if scaled:
            return vals, np.asarray(self.logs)[idx]
        return vals * np.exp(np.asarray(self.logs)[idx])[None, :]


# --- solutions --------------------------------------------------------------------------


ABEL_SWITCH = 1e3
ABEL_PANEL = 0.05
_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)


@dataclass
class OmegaScaleSolution:
    """Sampled (W, Z) with first derivatives on a uniform grid.

    Stored samples are multiplied by exp(rescale_log) to recover true values.
    ``dense`` (Taylor path only) evaluates between grid nodes.
    """

    x_grid: np.ndarray
    w_values: np.ndarray
    w_deriv: np.ndarray
    z_values: np.ndarray
    z_deriv: np.ndarray
    rescale_log: np.ndarray
    c_ratio: Optional[float] = None
    dense: Optional[TaylorIntegrator] = field(default=None, repr=False)
    exp_shift: float = 0.0

    def ratio(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.z_values / self.w_values

    def _eval(self, x, deriv):
        x = np.asarray(x, dtype=float)
        if self.dense is not None:
            v = self.dense.evaluate(np.ravel(x), deriv)
            return v[0].reshape(x.shape), v[1].reshape(x.shape)
        scale = np.exp(self.rescale_log)
        if deriv == 0:
            w, z = self.w_values, self.z_values
        else:
            w, z = self.w_deriv, self.z_deriv
        return (np.interp(x, self.x_grid, w * scale), np.interp(x, self.x_grid, z * scale))

    def W(self, x):
        return self._eval(x, 0)[0]

    def exit_value(self, y, c: Optional[float] = None):
        """Z(y) - c W(y), the decaying combination.

        Far from 0 the direct difference cancels catastrophically.  For
        second-order equations the combination is then taken from Abel's
        identity instead: with Wr = Z'W - ZW' = Wr(0) exp(int a_1),

            Z(y) - c W(y) = -W(y) int_y^inf Wr(x) / W(x)^2 dx,

        whose integrand has one sign.
        """
        c = self.c_ratio if c is None else c
        y = np.asarray(y, dtype=float)
        w, z = self._eval(y, 0)
        direct = z - c * w
        tail = self._tail_points(y, direct, z)
        if tail.any():
            direct = np.array(direct, dtype=float, copy=True)
            direct[tail] = self._abel_exit(y[tail], c)
        return direct

    def exit_value_prime(self, y, c: Optional[float] = None):
        c = self.c_ratio if c is None else c
        y = np.asarray(y, dtype=float)
        w, z = self._eval(y, 0)
        wp, zp = self._eval(y, 1)
        direct = zp - c * wp
        tail = self._tail_points(y, z - c * w, z)
        if tail.any():
            direct = np.array(direct, dtype=float, copy=True)
            yt = y[tail]
            e = self._abel_exit(yt, c)
            wt, wpt = w[tail], wp[tail]
            # E = W I with I' = Wr / W^2, so E' = W' E / W + Wr / W
            direct[tail] = wpt * e / wt + self._wronskian(yt) / wt
        return direct

    def _tail_points(self, y, direct, z):
        if self.dense is None or self.dense.spec.order != 2:
            return np.zeros(np.shape(y), dtype=bool)
        with np.errstate(divide="ignore", invalid="ignore"):
            amp = np.abs(z) / np.abs(direct)
        return np.atleast_1d((y > 0) & ~(amp < ABEL_SWITCH))

    def _a1_integral(self, x):
        """int_0^x a_1(t) dt, by Gauss-Legendre on fixed panels."""
        spec = self.dense.spec
        x = np.asarray(x, dtype=float)
        edges = np.arange(0.0, float(np.max(x, initial=0.0)) + ABEL_PANEL, ABEL_PANEL)
        k = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, len(edges) - 1)
        a, b = edges[k], x
        nodes = 0.5 * (b - a)[:, None] * (_GL_X[None, :] + 1.0) + a[:, None]
        part = 0.5 * (b - a) * (self._a1(nodes, spec) @ _GL_W)
        if len(edges) > 1:
            lo = edges[:-1]
            pn = 0.5 * ABEL_PANEL * (_GL_X[None, :] + 1.0) + lo[:, None]
            whole = np.concatenate([[0.0], np.cumsum(0.5 * ABEL_PANEL * (self._a1(pn, spec) @ _GL_W))])
        else:
            whole = np.zeros(1)
        return whole[k] + part

    @staticmethod
    def _a1(x, spec):
        basis = np.stack([np.ones_like(x), spec.discount.xi(x, spec.u, spec.shift), spec.discount.xi_prime(x, spec.u)])
        return np.tensordot(spec.coeffs[1], basis, axes=1)

    def _wronskian(self, x):
        spec = self.dense.spec
        wr0 = spec.ic_z[1] * spec.ic_w[0] - spec.ic_z[0] * spec.ic_w[1]
        return wr0 * np.exp(self._a1_integral(x))

    def _abel_exit(self, y, c):
        spec = self.dense.spec
        wr0 = spec.ic_z[1] * spec.ic_w[0] - spec.ic_z[0] * spec.ic_w[1]
        x_end = float(self.dense.x)
        y = np.asarray(y, dtype=float)
        lo = float(np.min(y))
        edges = np.append(np.arange(lo, x_end, ABEL_PANEL), x_end)
        a, b = edges[:-1], edges[1:]
        nodes = (0.5 * (b - a)[:, None] * (_GL_X[None, :] + 1.0) + a[:, None]).ravel()
        vals, logs = self.dense.evaluate(nodes, 0, scaled=True)
        log_f = self._a1_integral(nodes) - 2.0 * logs - 2.0 * np.log(np.abs(vals[0]))
        wts = (0.5 * (b - a)[:, None] * _GL_W[None, :]).ravel()
        out = np.empty_like(y)
        for i, yi in enumerate(y):
            # panels starting at or after yi, plus the partial panel containing yi
            j = int(np.searchsorted(edges, yi, side="right") - 1)
            pa, pb = yi, edges[min(j + 1, len(edges) - 1)]
            pn = 0.5 * (pb - pa) * (_GL_X + 1.0) + pa
            pv, pl = self.dense.evaluate(pn, 0, scaled=True)
            wy, ly = self.dense.evaluate([yi], 0, scaled=True)
            lf_part = self._a1_integral(pn) - 2.0 * pl - 2.0 * np.log(np.abs(pv[0]))
            total = np.sum(0.5 * (pb - pa) * _GL_W * np.exp(lf_part + ly[0]))
            rest = slice((j + 1) * _GL_X.size, None)
            total += np.sum(wts[rest] * np.exp(log_f[rest] + ly[0]))
            out[i] = -wr0 * wy[0, 0] * total
        return out

    def Z(self, x):
        return self._eval(x, 0)[1]

    def W_prime(self, x):
        return self._eval(x, 1)[0]

    def Z_prime(self, x):
        return self._eval(x, 1)[1]


def _solution_from_integrator(integ: TaylorIntegrator, x_max: float, grid_step: float) -> OmegaScaleSolution:
    n = max(2, int(round(x_max / grid_step)) + 1)
    grid = np.linspace(0.0, x_max, n)
    vals, logs = integ.evaluate(grid, 0, scaled=True)
    ders, _ = integ.evaluate(grid, 1, scaled=True)
    return OmegaScaleSolution(grid, vals[0], ders[0], vals[1], ders[1], logs, None, integ, integ.spec.exp_shift)


def taylor_integrate(spec: OdeSpec, x_max: float, step: float = 0.05, taylor_order: int = 8,
                     **kwargs) -> OmegaScaleSolution:
    """Integrate the W- and Z-problems of ``spec`` over [0, x_max]."""
    if not x_max > 0:
        raise DomainError("x_max must be positive")
    integ = TaylorIntegrator(spec, step, taylor_order, **kwargs)
    integ.advance_to(x_max)
    return _solution_from_integrator(integ, x_max, step)


# --- ratio plateau ---------------------------------------------------------------------------


def _plateau_point(x: np.ndarray, r: np.ndarray, tol: float, window: float) -> Optional[int]:
    """First grid index i with |r(x) - r(x - 1)| < tol |r(x)| for all x in [x_i - window, x_i]."""
    ok = np.zeros_like(r, dtype=bool)
    lag = np.interp(x - 1.0, x, r)
    valid = x >= 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.abs(r - lag) / np.abs(r)
    ok[valid] = rel[valid] < tol
    for i in np.nonzero(ok)[0]:
        lo = x[i] - window
        if lo < 1.0:
            continue
        seg = (x >= lo) & (x <= x[i])
        if np.all(ok[seg]):
            return int(i)
    return None


def c_ratio_limit(sol: OmegaScaleSolution, tol: float = C_TOL, window: float = C_WINDOW) -> float:
    """lim Z/W read off a plateau of the sampled ratio."""
    r = sol.ratio()
    i = _plateau_point(sol.x_grid, r, tol, window)
    if i is None:
        raise ConvergenceError(f"Z/W shows no plateau on [0, {sol.x_grid[-1]:.3g}] at tol {tol}")
    sol.c_ratio = float(r[i])
    return sol.c_ratio


def solve_to_plateau(spec: OdeSpec, step: float = 0.05, taylor_order: int = 8, tol: float = C_TOL,
                     window: float = C_WINDOW, x_cap: float = C_X_MAX, chunk: float = 2.0,
                     x_min: float = 0.0) -> OmegaScaleSolution:
    """Integrate in chunks until Z/W settles, then return the solution with c attached.

    The solution always extends at least to ``x_min``.
    """
    integ = TaylorIntegrator(spec, step, taylor_order)
    x_end = 0.0
    probe = min(step, 0.02)
    while True:
        x_end = min(x_end + chunk, x_cap)
        integ.advance_to(x_end)
        grid = np.arange(0.0, x_end + 1e-12, probe)
        vals, _ = integ.evaluate(grid, 0, scaled=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = vals[1] / vals[0]
        i = _plateau_point(grid, r, tol, window)
        if i is not None:
            if x_end < x_min:
                integ.advance_to(x_min)
                x_end = x_min
            sol = _solution_from_integrator(integ, x_end, probe)
            # the ratio keeps converging past the first plateau point
            sol.c_ratio = float(r[-1])
            return sol
        if x_end >= x_cap:
            raise ConvergenceError(f"Z/W shows no plateau by x={x_cap} (tol {tol})")


# --- Volterra oracle ----------------------------------------------------------------------------


def volterra_solve(discount: DiscountFunction, params: ModelParams, alpha: float = 0.0, u: float = 1.0,
                   x_max: float = 3.0, mesh: int = 2000) -> OmegaScaleSolution:
    """Trapezoidal product-integration marching for the renewal equations."""
    if mesh < 200:
        raise DomainError("mesh must have at least 200 nodes")
    tp = tilt(params, alpha)
    shift = laplace_exponent(alpha, params) if alpha else 0.0
    kernel = QScalePair(tp, 0.0)
    x = np.linspace(0.0, x_max, mesh)
    h = x[1] - x[0]
    xi = discount.xi(x, u, shift)
    if np.max(np.abs(np.diff(xi))) > 0.5 * max(1.0, np.max(np.abs(xi))):
        warnings.warn("mesh is coarse relative to the variation of xi", RuntimeWarning)
    Wk = kernel.W(x)
    dWk = kernel.W_prime(x)
    w0 = Wk[0]
    forcing = {"w": Wk, "z": np.ones(mesh)}
    out = {}
    for key, f in forcing.items():
        sol = np.empty(mesh)
        g = np.empty(mesh)  # xi * solution
        sol[0] = f[0]
        g[0] = xi[0] * sol[0]
        for n in range(1, mesh):
            # trapezoid: h*(W_n g_0/2 + sum_{j=1}^{n-1} W_{n-j} g_j + W_0 g_n/2)
            inner = 0.5 * Wk[n] * g[0]
            if n > 1:
                inner += np.dot(Wk[n - 1 : 0 : -1], g[1:n])
            sol[n] = (f[n] + h * inner) / (1.0 - 0.5 * h * w0 * xi[n])
            g[n] = xi[n] * sol[n]
        # derivative of the quadrature relation
        dforce = dWk if key == "w" else np.zeros(mesh)
        der = np.empty(mesh)
        for n in range(mesh):
            tr = 0.0
            if n > 0:
                tr = h * (0.5 * dWk[n] * g[0] + np.dot(dWk[n - 1 : 0 : -1], g[1:n]) + 0.5 * dWk[0] * g[n])
            der[n] = dforce[n] + w0 * g[n] + tr
        out[key] = (sol, der)
    zeros = np.zeros(mesh)
    return OmegaScaleSolution(x, out["w"][0], out["w"][1], out["z"][0], out["z"][1], zeros)
