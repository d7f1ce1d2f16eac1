"""Monte Carlo oracle for the stopping value v(s, u).

Simulates S = s e^X until it first enters (0, u] and averages
exp(-int_0^tau omega(S_t) dt) (K - S_tau).  With sigma = 0 the paths are
piecewise deterministic and are simulated exactly, jump to jump.  With
sigma > 0 the paths are stepped on a grid with a Brownian-bridge check for
crossings inside a step.

Paths are dropped once their remaining contribution is provably below
``drop_tol * K`` (or at ``t_max``).  Randomness comes from a SeedSequence
spawned into fixed-size batches, so results do not depend on how batches are
scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import DomainError
from .levy_model import ModelParams
from .omega_scale import DiscountFunction

BATCH = 10_000
Z99 = float(stats.norm.ppf(0.995))
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class MCConfig:
    n_paths: int = 100_000
    dt: float = 0.01
    seed: int = 12345
    t_max: float = 200.0
    drop_tol: float = 1e-10

    def __post_init__(self):
        if self.n_paths < 2:
            raise DomainError("n_paths must be at least 2")
        if not self.dt > 0:
            raise DomainError("dt must be positive")
        if not self.t_max > 0:
            raise DomainError("t_max must be positive")


@dataclass(frozen=True)
class MCResult:
    """Sample mean, 99% half-width and the truncation budget.

    ``tail_bound`` bounds the payoff lost by paths stopped at t_max or dropped
    as negligible; ``widened`` is set when it exceeds the statistical
    half-width, in which case ``half_width`` already includes it.
    """

    mean: float
    half_width: float
    n_paths: int
    truncated: int
    tail_bound: float = 0.0
    widened: bool = False

    def contains(self, value: float, rel_floor: float = 0.02) -> bool:
        return abs(value - self.mean) <= max(rel_floor * abs(value), 3.0 * self.half_width)


def _segment_integral(discount: DiscountFunction, s0: np.ndarray, zeta: float, dur: np.ndarray) -> np.ndarray:
    """int_0^dur omega(s0 e^{zeta t}) dt along the jump-free drift."""
    if discount.kind == "constant":
        return discount.q * dur
    if discount.kind == "linear":
        return discount.C * s0 * np.expm1(zeta * dur) / zeta
    t = 0.5 * dur[:, None] * (_GL_NODES[None, :] + 1.0)
    vals = discount.omega(s0[:, None] * np.exp(zeta * t))
    return 0.5 * dur * (vals @ _GL_WEIGHTS)


def _batch_sigma0(rng, n, s, u, p: ModelParams, d: DiscountFunction, cfg: MCConfig):
    x = np.full(n, np.log(s / u))
    log_disc = np.zeros(n)
    t = np.zeros(n)
    payoff = np.zeros(n)
    alive = np.ones(n, dtype=bool)
    truncated = 0
    while alive.any():
        idx = np.nonzero(alive)[0]
        m = idx.size
        wait = rng.exponential(1.0 / p.lam, m)
        wait = np.minimum(wait, cfg.t_max - t[idx])
        log_disc[idx] -= _segment_integral(d, u * np.exp(x[idx]), p.zeta, wait)
        x[idx] += p.zeta * wait
        t[idx] += wait
        jump = rng.exponential(1.0 / p.phi, m)
        timed_out = t[idx] >= cfg.t_max
        x_new = x[idx] - jump
        hit = (x_new <= 0.0) & ~timed_out
        hi = idx[hit]
        payoff[hi] = np.exp(log_disc[hi]) * (p.K - u * np.exp(x_new[hit]))
        x[idx] = x_new
        alive[hi] = False
        negligible = np.exp(log_disc[idx]) < cfg.drop_tol
        dead = idx[(timed_out | negligible) & ~hit]
        truncated += int(np.count_nonzero(timed_out & ~hit))
        alive[dead] = False
    return payoff, truncated


def _batch_stepped(rng, n, s, u, p: ModelParams, d: DiscountFunction, cfg: MCConfig):
    dt = cfg.dt
    sig = p.sigma
    sd = sig * np.sqrt(dt)
    x = np.full(n, np.log(s / u))
    log_disc = np.zeros(n)
    payoff = np.zeros(n)
    idx = np.arange(n)
    t = 0.0
    # without jumps the chance of ever reaching 0 from x is exp(-2 zeta x / sigma^2)
    hit_rate = 2.0 * p.zeta / sig**2 if (p.lam == 0 and p.zeta > 0) else 0.0
    while idx.size and t < cfg.t_max:
        m = idx.size
        x0 = x[idx]
        w0 = d.omega(u * np.exp(x0))
        x1 = x0 + p.zeta * dt + sd * rng.standard_normal(m)
        if p.lam > 0:
            nj = rng.poisson(p.lam * dt, m)
            has = nj > 0
            # a sum of k Exp(phi) jumps is Gamma(k, 1/phi)
            xj = x1.copy()
            xj[has] -= rng.gamma(nj[has], 1.0 / p.phi)
        else:
            xj = x1
        unif = rng.random(m)
        with np.errstate(over="ignore"):
            bridge = np.exp(-2.0 * np.maximum(x0, 0.0) * np.maximum(x1, 0.0) / (sig * sig * dt))
        creep = (x1 <= 0.0) | (unif < bridge)
        jumped = ~creep & (xj <= 0.0)
        w1 = d.omega(u * np.exp(np.where(creep, 0.0, x1)))
        step_int = 0.5 * (w0 + w1) * np.where(creep, 0.5 * dt, dt)
        log_disc[idx] -= step_int
        ci = idx[creep]
        payoff[ci] = np.exp(log_disc[ci]) * (p.K - u)
        ji = idx[jumped]
        payoff[ji] = np.exp(log_disc[ji]) * (p.K - u * np.exp(xj[jumped]))
        x[idx] = xj
        t += dt
        keep = ~(creep | jumped)
        bound = np.exp(log_disc[idx]) * (np.exp(-hit_rate * np.maximum(xj, 0.0)) if hit_rate else 1.0)
        keep &= bound >= cfg.drop_tol
        idx = idx[keep]
    truncated = idx.size
    return payoff, truncated


def mc_estimate(s: float, u: float, params: ModelParams, discount: DiscountFunction,
                config: MCConfig = MCConfig()) -> MCResult:
    """Mean of the discounted exercise payoff with a 99% confidence half-width."""
    if not u > 0:
        raise DomainError("need u > 0")
    if s <= u:
        return MCResult(params.K - s, 0.0, config.n_paths, 0)
    seeds = np.random.SeedSequence(config.seed).spawn(-(-config.n_paths // BATCH))
    sums = []
    truncated = 0
    left = config.n_paths
    for ss in seeds:
        n = min(BATCH, left)
        left -= n
        rng = np.random.default_rng(ss)
        if params.sigma == 0:
            pay, tr = _batch_sigma0(rng, n, s, u, params, discount, config)
        else:
            pay, tr = _batch_stepped(rng, n, s, u, params, discount, config)
        sums.append(pay)
        truncated += tr
    pay = np.concatenate(sums)
    mean = float(pay.mean())
    hw = Z99 * float(pay.std(ddof=1)) / np.sqrt(pay.size)
    # surviving paths sit above u, where omega >= omega(u)
    w_min = float(discount.omega(u))
    frac = truncated / pay.size
    tail = params.K * (frac * np.exp(-w_min * config.t_max) + config.drop_tol)
    widened = tail > hw
    if widened:
        hw += tail
    return MCResult(mean, hw, int(pay.size), truncated, float(tail), bool(widened))
