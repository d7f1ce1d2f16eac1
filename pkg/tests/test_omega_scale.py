import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from omegaput.errors import ConvergenceError, DomainError
from omegaput.levy_model import ModelParams, psi_roots
from omegaput.omega_scale import (
    DiscountFunction,
    TaylorIntegrator,
    build_ode,
    c_ratio_limit,
    exp_shift_ode,
    solve_to_plateau,
    taylor_integrate,
    volterra_solve,
)
from omegaput.scale_classic import QScalePair

P1 = ModelParams(r=0.05, sigma=0.2, lam=6.0, phi=2.0)
P2 = ModelParams(r=0.05, sigma=0.0, lam=6.0, phi=2.0)
P3 = ModelParams(r=0.05, sigma=0.2, lam=0.0)
LIN = DiscountFunction("linear", C=0.1)


def test_discount_validation():
    with pytest.raises(DomainError):
        DiscountFunction("cubic", C=1.0)
    with pytest.raises(DomainError):
        DiscountFunction("linear", C=0.0)
    with pytest.raises(DomainError):
        DiscountFunction("power", C=0.1, n=1.5)
    with pytest.raises(DomainError):
        DiscountFunction("constant", q=-0.1)


def test_discount_shapes():
    s = np.array([0.5, 2.0])
    assert np.allclose(DiscountFunction("sqrt_shift", C=0.005, Z=0.1).omega(s), 0.005 * np.sqrt(s) + 0.1)
    assert DiscountFunction("sqrt_shift", C=0.005, Z=0.1).lower_bound == 0.1
    assert DiscountFunction("constant", q=0.3).is_constant


@pytest.mark.parametrize("d", [LIN, DiscountFunction("power", C=0.3, n=0.5), DiscountFunction("arctan", C=0.5),
                               DiscountFunction("sqrt_shift", C=0.2, Z=0.1)])
def test_xi_series_matches_function(d):
    x0, u = 0.4, 1.7
    c = d.xi_series(x0, u, 14, shift=0.2)
    for h in (0.05, -0.08):
        approx = np.polyval(c[::-1], h)
        assert approx == pytest.approx(float(d.xi(x0 + h, u, 0.2)), rel=1e-12)
    assert c[1] == pytest.approx(float(d.xi_prime(x0, u)), rel=1e-12)


def test_sigma0_coefficients_example():
    spec = build_ode(LIN, P2)
    # f'' = (A e^x + B) f' + D e^x f
    A, B, D = 0.1 / 2.05, (6 - 2 * 2.05) / 2.05, 0.1 * 3 / 2.05
    a = spec.coefficients_at(0.0)
    assert a[1] == pytest.approx(A + B, rel=1e-12)
    assert a[0] == pytest.approx(D, rel=1e-12)
    a1 = spec.coefficients_at(1.0)
    assert a1[1] == pytest.approx(A * np.e + B, rel=1e-12)
    assert a1[0] == pytest.approx(D * np.e, rel=1e-12)
    assert (round(A, 7), round(B, 7), round(D, 7)) == (0.0487805, 0.9268293, 0.1463415)


@pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0, 2.0, 7.0])
def test_lambda0_coefficients_match_bessel_form(alpha):
    z, s2 = P3.zeta, P3.sigma**2
    spec = build_ode(LIN, P3, alpha)
    B = -2 * (z + s2 * alpha) / s2
    D = 2 * 0.1 / s2
    E = -2 * (z * alpha + s2 * alpha**2 / 2) / s2
    for x in (0.0, 0.7):
        a = spec.coefficients_at(x)
        assert a[1] == pytest.approx(B, rel=1e-12)
        assert a[0] == pytest.approx(D * np.exp(x) + E, rel=1e-12, abs=1e-12)


def test_third_order_coefficients_example():
    spec = build_ode(LIN, P1)
    rs = psi_roots(0.0, P1)
    g2, g3 = rs.roots[1], rs.roots[2]
    u1, u2, _ = rs.upsilons
    a = spec.coefficients_at(0.0)
    C = 0.1
    assert a[2] == pytest.approx(g2 + g3, rel=1e-12)
    assert a[1] == pytest.approx(C * (u2 * (g2 - g3) - u1 * g3) - g2 * g3, rel=1e-12)
    assert a[0] == pytest.approx(C * (u2 * (g2 - g3) + u1 * g2 * g3 - u1 * g3), rel=1e-12)


def test_root_swap_invariance():
    spec = build_ode(LIN, P1)
    rs = psi_roots(0.0, P1)
    g1, g2, g3 = rs.roots
    u1, u2, u3 = rs.upsilons
    p_a = u2 * (g2 - g3) - u1 * g3
    p_b = u3 * (g3 - g2) - u1 * g2
    assert p_a == pytest.approx(p_b, rel=1e-10)
    assert spec.ic_w[1] == pytest.approx(u3 * g3 + u2 * g2)


def test_initial_conditions():
    spec = build_ode(LIN, P1)
    assert spec.ic_w[0] == 0.0 and spec.ic_z[0] == 1.0 and spec.ic_z[1] == 0.0
    assert spec.ic_w[1] == pytest.approx(50.0, rel=1e-9)
    s2 = build_ode(LIN, P2)
    assert s2.ic_w[0] == pytest.approx(1 / 2.05)
    assert s2.ic_w[1] == pytest.approx((0.1 + 6) / 2.05**2, rel=1e-10)


def test_constant_xi_collapse():
    d = DiscountFunction("constant", q=0.5)
    sol = taylor_integrate(build_ode(d, P1), 5.0, step=0.05, taylor_order=16)
    pair = QScalePair(P1, 0.5)
    x = np.linspace(0.01, 5, 60)
    assert np.allclose(sol.W(x), pair.W(x), rtol=1e-8)
    assert np.allclose(sol.Z(x), pair.Z(x), rtol=1e-8)


def test_constant_c_ratio():
    d = DiscountFunction("constant", q=0.5)
    sol = solve_to_plateau(build_ode(d, P1), 0.05, 16, 1e-10)
    pair = QScalePair(P1, 0.5)
    assert sol.c_ratio == pytest.approx(0.5 / pair.phi_q, rel=1e-8)


def test_exp_shift_identity():
    spec = build_ode(LIN, P1, alpha=3.0)
    f = taylor_integrate(spec, 2.0, 0.02, 16)
    g = taylor_integrate(exp_shift_ode(spec, 3.0), 2.0, 0.02, 16)
    x = np.linspace(0, 2, 21)
    assert np.allclose(g.W(x), np.exp(3 * x) * f.W(x), rtol=1e-9, atol=1e-12)
    assert np.allclose(g.Z(x), np.exp(3 * x) * f.Z(x), rtol=1e-9)


def test_tilt_identity_for_w():
    # e^{alpha x} W_alpha^{(omega - psi(alpha))} equals the untilted W^{(omega)}
    base = taylor_integrate(build_ode(LIN, P1), 2.0, 0.02, 16)
    shifted = taylor_integrate(exp_shift_ode(build_ode(LIN, P1, alpha=5.0), 5.0), 2.0, 0.02, 16)
    x = np.linspace(0.05, 2, 20)
    assert np.allclose(shifted.W(x), base.W(x), rtol=1e-8)


@pytest.mark.parametrize("p,d", [(P2, LIN), (P3, LIN), (P2, DiscountFunction("power", C=0.1, n=0.5))])
def test_volterra_matches_taylor(p, d):
    t = taylor_integrate(build_ode(d, p), 3.0, 0.05, 16)
    mesh = 4000 if p.regime == "lambda0" else 2000
    v = volterra_solve(d, p, 0.0, 1.0, 3.0, mesh)
    x = v.x_grid[10::50]
    assert np.allclose(v.W(x), t.W(x), rtol=1e-4)
    assert np.allclose(v.Z(x), t.Z(x), rtol=1e-4)


def test_volterra_zero_xi_is_classical():
    d = DiscountFunction("constant", q=0.0)
    v = volterra_solve(d, P2, 0.0, 1.0, 2.0, 400)
    pair = QScalePair(P2, 0.0)
    assert np.allclose(v.w_values * np.exp(v.rescale_log), pair.W(v.x_grid), rtol=1e-12)
    assert np.allclose(v.z_values * np.exp(v.rescale_log), 1.0)


def test_volterra_mesh_guard():
    with pytest.raises(DomainError):
        volterra_solve(LIN, P2, 0.0, 1.0, 3.0, 50)


def test_joint_rescaling_invariance():
    spec = build_ode(LIN, P2)
    a = solve_to_plateau(spec, 0.05, 16, 1e-10)
    integ = TaylorIntegrator(spec, 0.05, 16, rescale_at=1e3)
    integ.advance_to(6.0)
    x = np.linspace(0.1, 6.0, 30)
    w, z = integ.evaluate(x)
    combo_forced = z - a.c_ratio * w
    combo = a.Z(x) - a.c_ratio * a.W(x)
    assert np.allclose(combo_forced, combo, rtol=1e-10, atol=1e-12 * np.abs(a.Z(x)).max())


def test_integrator_argument_checks():
    spec = build_ode(LIN, P2)
    with pytest.raises(DomainError):
        TaylorIntegrator(spec, step=0.0)
    with pytest.raises(DomainError):
        TaylorIntegrator(spec, taylor_order=2)
    integ = TaylorIntegrator(spec)
    integ.advance_to(1.0)
    with pytest.raises(DomainError):
        integ.evaluate(2.0)


def test_plateau_failure():
    spec = build_ode(LIN, P2)
    with pytest.raises(ConvergenceError):
        solve_to_plateau(spec, 0.05, 16, 1e-16, x_cap=3.0)
    sol = taylor_integrate(spec, 2.0, 0.05, 16)
    with pytest.raises(ConvergenceError):
        c_ratio_limit(sol, tol=1e-15)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(0.5, 3.0))
def test_w_positive_and_increasing(C, u):
    sol = solve_to_plateau(build_ode(DiscountFunction("linear", C=C), P2, 0.0, u), 0.05, 16, 1e-8)
    x = np.linspace(0, min(4.0, sol.x_grid[-1]), 50)
    w = sol.W(x)
    assert np.all(w > 0) and np.all(np.diff(w) > 0)
    assert sol.c_ratio > 0


@pytest.mark.parametrize("p", [P2, P3])
def test_decaying_combination_deep_in_tail(p):
    # constant xi: the decaying combination is the classical exit transform
    q = 0.7
    sol = solve_to_plateau(build_ode(DiscountFunction("constant", q=q), p), 0.05, 16, 1e-10, x_min=6.0)
    pair = QScalePair(p, q)
    y = np.array([0.3, 1.0, 3.0, 5.5])
    exact = pair.exit_value(y)
    assert np.allclose(sol.exit_value(y), exact, rtol=1e-8)
    assert np.allclose(sol.exit_value_prime(y), pair.exit_value_prime(y), rtol=1e-7)
