import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from aeblow import metric
from aeblow.errors import ConfigurationError, DomainError


def pl_k(r, c=0.5, rho=1.0):
    return 1.0 + c * (1.0 + r * r) ** (-rho / 2.0)


def pl_k1(r, c=0.5):
    # d/dr of (1+r^2)^(-1/2), times c
    return -c * r * (1.0 + r * r) ** -1.5


def pl_k2(r, c=0.5):
    return -c * ((1.0 + r * r) ** -1.5 - 3.0 * r * r * (1.0 + r * r) ** -2.5)


def test_eval_k_flat(flat3):
    k, k1, k2 = metric.eval_k(flat3, 5.0)
    assert (k, k1, k2) == (1.0, 0.0, 0.0)


def test_eval_k_power_law_origin(powerlaw3):
    k, k1, k2 = metric.eval_k(powerlaw3, 0.0)
    assert k == pytest.approx(1.5, abs=1e-14)
    assert k1 == pytest.approx(0.0, abs=1e-12)
    assert k2 == pytest.approx(-0.5, rel=1e-10)


def test_eval_k_power_law_matches_hand_derivatives(powerlaw3):
    r = np.array([0.3, 1.0, 4.0, 25.0])
    k, k1, k2 = metric.eval_k(powerlaw3, r)
    assert np.allclose(k, pl_k(r), rtol=1e-12)
    assert np.allclose(k1, pl_k1(r), rtol=1e-10)
    assert np.allclose(k2, pl_k2(r), rtol=1e-8, atol=1e-14)


def test_power_law_decays_to_one_from_above(powerlaw3):
    r = np.geomspace(0.1, 1e3, 200)
    k, _, _ = metric.eval_k(powerlaw3, r)
    assert np.all(k > 1.0)
    assert np.all(np.diff(k) < 0)
    assert k[-1] == pytest.approx(1.0, abs=1e-2)


def test_k_derivative_finite_difference_order(powerlaw3):
    r = 2.0
    errs = []
    for h in (1e-2, 5e-3):
        fd = (pl_k(r + h) - pl_k(r - h)) / (2 * h)
        errs.append(abs(metric.eval_k(powerlaw3, r)[1] - fd))
    order = math.log(errs[0] / errs[1]) / math.log(2.0)
    assert order >= 1.9


def test_k_integral_flat(flat3):
    assert metric.k_integral(flat3, 3.7) == pytest.approx(3.7, rel=1e-14)
    assert metric.k_integral(flat3, 0.0) == 0.0


def test_k_integral_power_law_quadrature_oracle(powerlaw3):
    for r in (1.0, 10.0, 40.0):
        oracle = quad(pl_k, 0.0, r, epsabs=1e-13, epsrel=1e-13)[0]
        assert metric.k_integral(powerlaw3, r) == pytest.approx(oracle, rel=1e-10)
    # rho = 1 closed form: r + c asinh(r)
    assert metric.k_integral(powerlaw3, 10.0) == pytest.approx(
        10.0 + 0.5 * math.asinh(10.0), rel=1e-10)


def test_k_integral_additive(powerlaw3):
    r1, r2 = 3.0, 8.5
    inc = quad(pl_k, r1, r1 + r2, epsabs=1e-12, epsrel=1e-12)[0]
    assert metric.k_integral(powerlaw3, r1 + r2) == pytest.approx(
        metric.k_integral(powerlaw3, r1) + inc, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(r=st.floats(0.0, 1e3), c=st.floats(-0.45, 0.45),
       rho=st.floats(0.5, 3.0))
def test_k_integral_sandwiched_by_delta0(r, c, rho):
    prof = metric.power_law_profile(3, c, rho)
    val = metric.k_integral(prof, r)
    assert prof.delta0 * r <= val + 1e-12
    assert val <= r / prof.delta0 + 1e-12


@settings(max_examples=40, deadline=None)
@given(r=st.floats(1e-3, 1e3), c=st.floats(-0.45, 0.45))
def test_k_always_inside_delta0_window(r, c):
    prof = metric.power_law_profile(2, c, 1.0)
    k, _, _ = metric.eval_k(prof, r)
    assert prof.delta0 < k < 1.0 / prof.delta0


def test_g_potential_flat_n3_is_zero(flat3):
    for r in (0.1, 1.0, 7.0):
        assert metric.g_potential(flat3, r) == 0.0


def test_g_potential_flat_n2(flat2):
    assert metric.g_potential(flat2, 2.0) == pytest.approx(1.0 / 16.0,
                                                           rel=1e-12)


def test_g_potential_power_law_term_oracle(powerlaw3):
    r, n = 1.0, 3
    k, k1, k2 = pl_k(r), pl_k1(r), pl_k2(r)
    oracle = (-(n - 1) * (n - 3) / (4 * r * r) + (n - 1) * k1 / (2 * r * k)
              + k2 / (2 * k) - 0.75 * (k1 / k) ** 2)
    assert metric.g_potential(powerlaw3, r) == pytest.approx(oracle, rel=1e-10)


def test_g_potential_rejects_origin(flat2):
    with pytest.raises(DomainError):
        metric.g_potential(flat2, 0.0)


def test_r2_g_potential_bounded(powerlaw3):
    r = np.geomspace(0.05, 1e3, 300)
    vals = np.array([metric.g_potential(powerlaw3, x) for x in r])
    assert np.max(np.abs(r * r * vals)) < 10.0


def test_validate_flat_all_zero(flat3):
    rep = metric.validate_long_range(flat3, np.linspace(1e-3, 60.0, 2000))
    assert rep.passed
    assert rep.r2 == 0.0
    assert rep.lambda0 == 1.0
    assert rep.kp_l1 == 0.0 and rep.kpp_l1 == 0.0


def test_validate_power_law_passes(powerlaw3):
    rep = metric.validate_long_range(powerlaw3,
                                     np.linspace(1e-3, 80.0, 4000))
    assert rep.passed
    assert rep.kp_l1 > 0.0 and math.isfinite(rep.kp_l1)
    assert 0.0 < rep.lambda0 <= 1.0


def test_validate_flags_nondecaying_table():
    r = np.linspace(0.0, 60.0, 400)
    k = 1.0 + 0.4 * np.log1p(r) / np.log(61.0)  # grows, never decays back
    prof = metric.tabulated_profile(3, r, k, rho=1.0)
    rep = metric.validate_long_range(prof, np.linspace(1e-3, 55.0, 2000))
    assert not rep.passed
    assert rep.failures


def test_validate_needs_long_grid(powerlaw3):
    with pytest.raises(ConfigurationError):
        metric.validate_long_range(powerlaw3, np.linspace(1e-3, 2.0, 50))


def test_config_round_trip(powerlaw3, flat2):
    for prof in (powerlaw3, flat2):
        back = metric.profile_from_config(metric.profile_to_config(prof))
        assert back.kind == prof.kind and back.n == prof.n
        r = np.linspace(0.0, 10.0, 50)
        assert np.allclose(metric.eval_k(back, r)[0],
                           metric.eval_k(prof, r)[0], rtol=1e-12)


def test_config_missing_key_named():
    with pytest.raises(ConfigurationError, match="'n'"):
        metric.profile_from_config({"kind": "flat"})
