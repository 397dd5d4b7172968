import math

import numpy as np
import pytest

from aeblow import ode_lab as ol
from aeblow.damping import eta_of_s
from aeblow.errors import DomainError


def test_integrator_sine_oracle():
    traj = ol.integrate_2nd_order(lambda t, y, yp: -y, 0.0, 1.0, (0.0, 10.0),
                                  tolerance=1e-12)
    ts = np.linspace(0.0, 10.0, 101)
    assert np.max(np.abs(traj(ts) - np.sin(ts))) < 1e-9
    assert np.max(np.abs(traj.deriv(ts) - np.cos(ts))) < 1e-9


def test_integrator_exp_oracle():
    traj = ol.integrate_2nd_order(lambda t, y, yp: y, 1.0, 1.0, (0.0, 5.0),
                                  tolerance=1e-12)
    ts = np.linspace(0.0, 5.0, 51)
    assert np.max(np.abs(traj(ts) - np.exp(ts)) / np.exp(ts)) < 1e-9


def test_kato_exact_blowup_time():
    # F'' = 6 F^2 with F(0)=1, F'(0)=2 has F = (1-t)^-2, blow-up at t = 1
    prob = ol.KatoProblem(a=1.0, alpha=0.0, beta=2.0, k=6.0, f0=1.0, f0p=2.0)
    res = ol.kato_blowup_time(prob, tolerance=1e-12)
    assert res.blew_up
    assert res.t_blowup == pytest.approx(1.0, abs=1e-3)
    assert len(res.crossings) == 3
    assert res.crossings[0] < res.crossings[1] < res.crossings[2]


def test_kato_no_blowup_within_budget():
    prob = ol.KatoProblem(a=1.0, alpha=0.0, beta=2.0, k=1e-12,
                          f0=1e-6, f0p=0.0)
    res = ol.kato_blowup_time(prob, t_budget=10.0)
    assert not res.blew_up
    assert res.t_blowup is None


def test_delta_sweep_special_slope():
    # a=1, alpha=1, beta=2: exponent -(beta-1)/((beta-1)a - alpha + 2) = -1/2
    deltas = np.geomspace(1e-3, 1e-2, 5)
    _, slope, _ = ol.kato_delta_sweep(1.0, 1.0, 2.0, deltas)
    theory = ol.KatoProblem(a=1.0, alpha=1.0, beta=2.0).theory_exponent
    assert theory == pytest.approx(-0.5, rel=1e-12)
    assert slope == pytest.approx(theory, rel=0.1)


def test_delta_sweep_minus_one_third():
    # a=1, alpha=0, beta=2: exponent -(1)/(1 - 0 + 2) = -1/3
    deltas = np.geomspace(1e-4, 1e-3, 5)
    _, slope, _ = ol.kato_delta_sweep(1.0, 0.0, 2.0, deltas)
    theory = ol.KatoProblem(a=1.0, alpha=0.0, beta=2.0).theory_exponent
    assert theory == pytest.approx(-1.0 / 3.0, rel=1e-12)
    assert slope == pytest.approx(-1.0 / 3.0, rel=0.1)


def test_blowup_time_monotone_in_delta_and_k():
    prob = lambda d, k: ol.KatoProblem(a=1.0, alpha=0.0, beta=2.0, k=k,
                                       f0=d, f0p=d)
    t_small = ol.kato_blowup_time(prob(1e-3, 1.0)).t_blowup
    t_big = ol.kato_blowup_time(prob(1e-2, 1.0)).t_blowup
    assert t_big < t_small
    t_weak = ol.kato_blowup_time(prob(1e-3, 0.5)).t_blowup
    assert t_weak > t_small


def test_kato_hypothesis_rejected():
    with pytest.raises(DomainError):
        ol.KatoProblem(a=1.0, alpha=4.0, beta=1.5)   # (beta-1)a <= alpha-2
    with pytest.raises(DomainError):
        ol.KatoProblem(a=1.0, alpha=0.0, beta=1.0)   # beta must exceed 1
    with pytest.raises(DomainError):
        ol.KatoProblem(a=0.5, alpha=0.0, beta=2.0)   # a must be >= 1


def test_forward_comparison_zero_damping(zero_damping):
    lam = 0.7
    sol = ol.forward_comparison(zero_damping, lam, 10.0)
    # with mt = 1 the solution is sinh(lam t)/lam and eta(t) = t
    exact = np.sinh(lam * sol.t) / lam
    assert np.max(np.abs(sol.y - exact) / (1.0 + exact)) < 1e-9
    assert sol.c_low == pytest.approx(1.0, rel=1e-6)


def test_backward_comparison_terminal_conditions(scat_damping):
    sol = ol.backward_comparison(scat_damping, 0.5, 8.0)
    assert abs(sol(8.0)) < 1e-10
    assert sol.yp[-1] == pytest.approx(-1.0, abs=1e-10)
    assert np.all(sol.y[:-1] > 0)          # strictly positive before T
    assert sol.c_low > 0


def test_backward_zero_damping_time_reversal(zero_damping):
    lam, T = 0.4, 6.0
    sol = ol.backward_comparison(zero_damping, lam, T)
    exact = np.sinh(lam * (T - sol.t)) / lam
    assert np.max(np.abs(sol.y - exact)) < 1e-8


def test_comparison_sandwich(scat_damping):
    # c_low * sinh(lam eta) <= lam y and |y'| >= c_low cosh(lam eta)
    lam = 0.3
    sol = ol.forward_comparison(scat_damping, lam, 12.0)
    d1 = scat_damping.delta1
    assert 0 < d1 <= 1.0
    assert sol.c_low > 0
    eta = np.asarray(eta_of_s(scat_damping, sol.t[1:]))
    assert np.all(lam * sol.y[1:] >= sol.c_low * np.sinh(lam * eta) - 1e-12)
    # upper sandwich: lam*y / sinh(lam eta) stays bounded on the whole window
    ratio = lam * sol.y[1:] / np.sinh(lam * eta)
    assert np.max(ratio) < 5.0


def test_comparison_rejects_bad_args(zero_damping):
    with pytest.raises(DomainError):
        ol.forward_comparison(zero_damping, -1.0, 5.0)
    with pytest.raises(DomainError):
        ol.backward_comparison(zero_damping, 0.5, -2.0)
