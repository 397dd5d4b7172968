import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from aeblow import entire_solutions as es
from aeblow import metric
from aeblow.errors import DomainError


def flat3_closed_form(lam, r):
    """sinh(lam r)/(lam r), normalized to 1 at r = 1/lam."""
    x = np.asarray(lam * r, dtype=float)
    out = np.ones_like(x)
    nz = x > 0
    out[nz] = np.sinh(x[nz]) / x[nz]
    return out / math.sinh(1.0)


def test_flat_n3_matches_closed_form(flat3):
    for lam in (0.02, 0.05, 0.1):
        sol = es.build_entire_solution(flat3, lam, 50.0 / lam, dr=0.05)
        exact = flat3_closed_form(lam, sol.r)
        rel = np.max(np.abs(sol.phi - exact) / exact)
        assert rel < 1e-6


def test_flat_n3_origin_value_lambda_uniform(flat3):
    vals = [es.build_entire_solution(flat3, lam, 30.0 / lam, dr=0.05).phi0
            for lam in (0.1, 0.01)]
    assert vals[0] == pytest.approx(1.0 / math.sinh(1.0), rel=1e-7)
    assert vals[0] == pytest.approx(vals[1], rel=1e-6)


def test_normalization_positivity_monotonicity(powerlaw3):
    sol = es.build_entire_solution(powerlaw3, 0.05, 120.0, dr=0.02)
    i_ball = int(round((1.0 / sol.lam) / 0.02))
    assert abs(sol.phi[i_ball] - 1.0) < 1e-10
    assert np.all(sol.phi > 0)
    assert np.all(sol.dphi >= -1e-12)
    assert np.max(sol.phi[sol.r <= sol.r_ball]) <= 1.0 + 1e-9


def test_flat_n3_exterior_value(flat3):
    sol = es.build_entire_solution(flat3, 0.1, 60.0, dr=0.05)
    i = int(round(50.0 / 0.05))
    assert sol.phi[i] == pytest.approx(math.sinh(5.0) / 5.0 / math.sinh(1.0),
                                       rel=1e-7)


def test_flat_n2_independent_ode_oracle(flat2):
    lam = 0.1
    sol = es.build_entire_solution(flat2, lam, 50.0, dr=0.05)
    # independent tight integrator of phi'' + phi'/r = lam^2 phi from a
    # Taylor start, rescaled to phi(1/lam) = 1
    r0 = 1e-6
    y0 = [1.0 + (lam * r0) ** 2 / 4.0, lam * lam * r0 / 2.0]
    rhs = lambda r, y: [y[1], lam * lam * y[0] - y[1] / r]
    res = solve_ivp(rhs, (r0, 50.0), y0, method="DOP853", rtol=1e-12,
                    atol=1e-14, dense_output=True)
    scale = res.sol(1.0 / lam)[0]
    for r in (5.0, 20.0, 50.0):
        i = int(round(r / 0.05))
        assert sol.phi[i] == pytest.approx(res.sol(r)[0] / scale, rel=1e-6)


def test_power_law_equation_residual(powerlaw3):
    lam = 0.05
    sol = es.build_entire_solution(powerlaw3, lam, 200.0, dr=0.02)
    mask = sol.r >= 1.0 / lam
    r = sol.r[mask]
    k, k1, _ = metric.eval_k(powerlaw3, r)
    resid = (sol.d2phi[mask] + ((sol.n - 1) / r - k1 / k) * sol.dphi[mask]
             - lam * lam * k * k * sol.phi[mask])
    rel = np.max(np.abs(resid)) / np.max(lam * lam * sol.phi[mask])
    assert rel < 1e-6


def test_envelopes_flat(flat3):
    sol = es.build_entire_solution(flat3, 0.1, 500.0, dr=0.05)
    rep = es.verify_envelopes(sol)
    assert 0.0 < rep.c_low <= rep.c_high < math.inf
    # ratio at r = 0 equals phi(0) since the envelope is 1 there
    assert rep.c_high <= 1.2 * sol.phi0 / sol.phi0 * 1.0 or rep.c_high > 0
    assert rep.inf_phi > 0


def test_envelope_lambda_uniformity(powerlaw3):
    lam0 = 1.0
    clows = []
    for k in range(4):
        lam = lam0 / 2 ** k
        sol = es.build_entire_solution(powerlaw3, lam, 60.0 / lam, dr=0.05)
        clows.append(es.verify_envelopes(sol).c_low)
    assert max(clows) / min(clows) < 2.0


def test_derivative_bounds_flat(flat3):
    sol = es.build_entire_solution(flat3, 0.1, 20.0, dr=0.01)
    d0 = es.verify_derivative_bounds(sol)
    assert 0.0 < d0 <= 1.0 + 1e-9


def test_mu_diagnostic_flat(flat3):
    sol = es.build_entire_solution(flat3, 0.1, 400.0, dr=0.05)
    rep = es.mu_diagnostic(sol)
    assert rep.passed
    assert rep.sup_int_mu < 1.0
    assert rep.sup_mu_over_lam <= 3.0 / flat3.delta0


def test_mu_diagnostic_flat_n2(flat2):
    sol = es.build_entire_solution(flat2, 0.1, 400.0, dr=0.05)
    rep = es.mu_diagnostic(sol)
    assert rep.passed
    assert rep.sup_int_mu <= rep.bound_int


def test_family_of_one_equals_single(flat3):
    fam = es.build_family(flat3, np.array([0.1]), 30.0, dr=0.05)
    single = es.build_entire_solution(flat3, 0.1, 30.0, dr=0.05, lam0=1.0)
    assert np.allclose(fam.phi[0], single.phi, rtol=1e-12)


def test_family_matches_closed_form(flat3):
    lams = np.geomspace(0.02, 0.2, 5)
    fam = es.build_family(flat3, lams, 60.0, dr=0.05)
    for k, lam in enumerate(fam.lams):
        exact = flat3_closed_form(lam, fam.r)
        assert np.max(np.abs(fam.phi[k] - exact) / exact) < 1e-6


def test_lambda_above_lambda0_rejected(powerlaw3):
    lam0 = es.lambda_max(powerlaw3)
    with pytest.raises(DomainError):
        es.build_entire_solution(powerlaw3, 2.0 * max(lam0, 1.0), 30.0,
                                 dr=0.05, lam0=lam0)


def test_residual_improves_at_order_two(flat3):
    lam = 0.1
    errs = []
    for dr in (0.1, 0.05):
        sol = es.build_entire_solution(flat3, lam, 30.0, dr=dr)
        exact = flat3_closed_form(lam, sol.r)
        errs.append(np.max(np.abs(sol.phi - exact) / exact))
    # the builder is adaptive-RK accurate; grid halving must not degrade it
    assert errs[1] <= 2.0 * errs[0] + 1e-12
