import numpy as np
import pytest

from omegaput.closed_forms import (
    bessel_scale_lambda0,
    bs_put_value,
    c_lambda0,
    c_sigma0,
    kummer_scale_sigma0,
)
from omegaput.errors import DomainError
from omegaput.levy_model import ModelParams
from omegaput.omega_scale import DiscountFunction, build_ode, solve_to_plateau, taylor_integrate

P1 = ModelParams(r=0.05, sigma=0.2, lam=6.0, phi=2.0)
P2 = ModelParams(r=0.05, sigma=0.0, lam=6.0, phi=2.0, K=20.0)
P3 = ModelParams(r=0.05, sigma=0.2, lam=0.0, K=20.0)
LIN = DiscountFunction("linear", C=0.1)
SQRT = DiscountFunction("power", C=0.1, n=0.5)


def test_kummer_initial_values():
    w = kummer_scale_sigma0(LIN, P2, "W")
    z = kummer_scale_sigma0(LIN, P2, "Z")
    assert float(w(0.0)) == pytest.approx(1 / 2.05, rel=1e-10)
    assert float(w.deriv(0.0)) == pytest.approx(6.1 / 2.05**2, rel=1e-8)
    assert float(z(0.0)) == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("d", [LIN, SQRT])
@pytest.mark.parametrize("u", [1.0, 3.7])
def test_kummer_matches_ode(d, u):
    sol = taylor_integrate(build_ode(d, P2, 0.0, u), 3.0, 0.05, 16)
    x = np.linspace(0, 3, 31)
    for which, num in (("W", sol.W(x)), ("Z", sol.Z(x))):
        assert np.allclose(kummer_scale_sigma0(d, P2, which, u)(x), num, rtol=1e-8)


def test_kummer_rejects_integer_b():
    # b = 1 - B/n is an integer when lam - phi zeta = 0 (B = 0)
    p = ModelParams(r=0.05, sigma=0.0, lam=6.0, phi=2.0, zeta=3.0)
    with pytest.raises(DomainError):
        kummer_scale_sigma0(LIN, p, "W")


def test_kummer_bad_which():
    with pytest.raises(DomainError):
        kummer_scale_sigma0(LIN, P2, "Q")


def test_c_sigma0_against_plateau_and_large_x():
    c = c_sigma0(LIN, P2)
    sol = solve_to_plateau(build_ode(LIN, P2), 0.05, 16, 1e-10)
    assert sol.c_ratio == pytest.approx(c, rel=1e-4)
    w = kummer_scale_sigma0(LIN, P2, "W")
    z = kummer_scale_sigma0(LIN, P2, "Z")
    assert float(z.scaled(15.0) / w.scaled(15.0)) == pytest.approx(c, rel=1e-3)


def test_bessel_hyperbolic_case():
    w = bessel_scale_lambda0(LIN, P3, 0.0, "W")
    assert w.v == pytest.approx(1.5)
    assert w.hyperbolic
    assert float(w(0.0)) == pytest.approx(0.0, abs=1e-12)
    assert float(w.deriv(0.0)) == pytest.approx(50.0, rel=1e-10)


@pytest.mark.parametrize("d", [LIN, SQRT])
@pytest.mark.parametrize("alpha", [0.0, 2.0])
def test_bessel_matches_ode(d, alpha):
    spec = build_ode(d, P3, alpha)
    sol = taylor_integrate(spec, 3.0, 0.05, 16)
    x = np.linspace(0, 3, 31)
    for which, num in (("W", sol.W(x)), ("Z", sol.Z(x))):
        cf = bessel_scale_lambda0(d, P3, alpha, which)(x)
        assert np.allclose(cf, num, rtol=1e-8, atol=1e-12)


def test_c_lambda0_against_plateau():
    c = c_lambda0(LIN, P3)
    sol = solve_to_plateau(build_ode(LIN, P3), 0.05, 16, 1e-10)
    assert sol.c_ratio == pytest.approx(c, rel=1e-4)
    w = bessel_scale_lambda0(LIN, P3, 0.0, "W")
    z = bessel_scale_lambda0(LIN, P3, 0.0, "Z")
    assert float(z.scaled(15.0) / w.scaled(15.0)) == pytest.approx(c, rel=1e-6)


def test_bs_put_value():
    v, u = bs_put_value(np.array([10.0, 100 / 7, 20.0]), P3)
    assert u == pytest.approx(100 / 7, abs=1e-10)
    assert v[0] == pytest.approx(10.0)
    assert v[1] == pytest.approx(20 - 100 / 7, rel=1e-12)
    assert v[2] == pytest.approx((20 - 100 / 7) * 1.4**-2.5, rel=1e-12)
    assert v[2] == pytest.approx(2.4641, abs=1e-4)
    with pytest.raises(DomainError):
        bs_put_value(1.0, P1)
