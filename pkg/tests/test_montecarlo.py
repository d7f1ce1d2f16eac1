import numpy as np
import pytest

from omegaput.errors import DomainError
from omegaput.levy_model import ModelParams
from omegaput.montecarlo import MCConfig, mc_estimate
from omegaput.omega_scale import DiscountFunction
from omegaput.pricer import PricingMachinery, candidate_value

P2 = ModelParams(r=0.05, sigma=0.0, lam=6.0, phi=2.0, K=20.0)
P1 = ModelParams(r=0.05, sigma=0.2, lam=6.0, phi=2.0, K=20.0)


def test_immediate_stop():
    r = mc_estimate(5.0, 6.0, P2, DiscountFunction("linear", C=0.1))
    assert r.mean == 15.0 and r.half_width == 0.0


def test_config_validation():
    with pytest.raises(DomainError):
        MCConfig(n_paths=1)
    with pytest.raises(DomainError):
        MCConfig(dt=0.0)


def test_reproducible():
    d = DiscountFunction("arctan", C=0.5)
    cfg = MCConfig(n_paths=20_000, seed=9)
    a = mc_estimate(15.0, 12.0, P2, d, cfg)
    b = mc_estimate(15.0, 12.0, P2, d, cfg)
    assert a == b
    c = mc_estimate(15.0, 12.0, P2, d, MCConfig(n_paths=20_000, seed=10))
    assert c.mean != a.mean


@pytest.mark.parametrize("d", [DiscountFunction("arctan", C=0.5), DiscountFunction("power", C=0.1, n=0.5)])
def test_sigma0_against_scale_functions(d):
    m = PricingMachinery(P2, d)
    m.y_span_s = 20.0
    u = 10.0
    exact = candidate_value(13.0, u, m)[0]
    r = mc_estimate(13.0, u, P2, d, MCConfig(n_paths=20_000, seed=4))
    assert r.contains(exact)


def test_full_regime_against_scale_functions():
    d = DiscountFunction("constant", q=0.5)
    m = PricingMachinery(P1, d)
    u = 8.0
    exact = candidate_value(9.0, u, m)[0]
    r = mc_estimate(9.0, u, P1, d, MCConfig(n_paths=20_000, dt=1e-3, seed=2))
    assert r.contains(exact)
