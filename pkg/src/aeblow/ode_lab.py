"""Second-order ODE studies: comparison solutions and the blow-up ODE.

Three users: the generic adaptive integrator with dense output, the auxiliary
solutions of y'' = lam^2 mt(t)^2 y used to build test functions, and the
blow-up ODE F'' = k (1+t)^-alpha F^beta whose finite blow-up time scales like
a power of the seed size delta.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .damping import DampingProfile, eta_of_s, m_tilde
from .errors import DomainError, IntegrationError

__all__ = [
    "Trajectory2",
    "integrate_2nd_order",
    "ComparisonSolution",
    "forward_comparison",
    "backward_comparison",
    "KatoProblem",
    "KatoResult",
    "kato_blowup_time",
    "kato_delta_sweep",
]


@dataclass(frozen=True)
class Trajectory2:
    """Dense solution of a scalar second-order ODE."""

    t0: float
    t1: float
    _sol: object

    def __call__(self, t):
        """Return y(t) (value row 0, derivative row 1 via .deriv)."""
        return np.asarray(self._sol(t))[0]

    def deriv(self, t):
        return np.asarray(self._sol(t))[1]


def integrate_2nd_order(rhs: Callable[[float, float, float], float],
                        y0: float, v0: float,
                        span: tuple[float, float],
                        tolerance: float = 1e-10) -> Trajectory2:
    """Adaptive solve of y'' = rhs(t, y, y') with dense output."""
    res = solve_ivp(lambda t, z: [z[1], rhs(t, z[0], z[1])],
                    span, [y0, v0], method="DOP853",
                    rtol=tolerance, atol=tolerance * 1e-2, dense_output=True)
    if not res.success:
        raise IntegrationError(f"2nd-order integration failed: {res.message}")
    return Trajectory2(t0=span[0], t1=span[1], _sol=res.sol)


@dataclass(frozen=True)
class ComparisonSolution:
    """Solution of y'' = lam^2 mt(t)^2 y with measured envelope constants."""

    lam: float
    direction: str            # "forward" | "backward"
    T: float                  # horizon (forward) or terminal time (backward)
    t: np.ndarray
    y: np.ndarray
    yp: np.ndarray
    eta: np.ndarray           # eta(t) on the same samples
    c_low: float              # inf of min(lam*y/sinh(lam*eta_arg), |y'|/cosh(...))
    delta1: float

    def __call__(self, t):
        return np.interp(t, self.t, self.y)


def _mt2_rhs(damping: DampingProfile, lam: float):
    return lambda t, z: [z[1], lam * lam * m_tilde(damping, t) ** 2 * z[0]]


def forward_comparison(damping: DampingProfile, lam: float,
                       t_max: float, n_samples: int = 400) -> ComparisonSolution:
    """Solve y'' = lam^2 mt^2 y, y(0)=0, y'(0)=1 and measure its sinh envelope."""
    if lam <= 0:
        raise DomainError("lambda must be positive")
    res = solve_ivp(_mt2_rhs(damping, lam), (0.0, t_max), [0.0, 1.0],
                    method="DOP853", rtol=1e-11, atol=1e-13, dense_output=True)
    if not res.success:
        raise IntegrationError(res.message)
    ts = np.linspace(0.0, t_max, n_samples)
    y, yp = res.sol(ts)
    eta = np.asarray(eta_of_s(damping, ts))
    # skip t=0 where both sides vanish; the ratio limit there is mt(0)=1
    arg = lam * eta[1:]
    c_low = float(np.min(np.minimum(lam * y[1:] / np.sinh(arg),
                                    yp[1:] / np.cosh(arg))))
    return ComparisonSolution(lam=lam, direction="forward", T=t_max,
                              t=ts, y=y, yp=yp, eta=eta,
                              c_low=c_low, delta1=damping.delta1)


def backward_comparison(damping: DampingProfile, lam: float,
                        T: float, n_samples: int = 400) -> ComparisonSolution:
    """Solve y'' = lam^2 mt^2 y backwards from y(T)=0, y'(T)=-1."""
    if lam <= 0 or T <= 0:
        raise DomainError("lambda and T must be positive")
    res = solve_ivp(_mt2_rhs(damping, lam), (T, 0.0), [0.0, -1.0],
                    method="DOP853", rtol=1e-11, atol=1e-13, dense_output=True)
    if not res.success:
        raise IntegrationError(res.message)
    ts = np.linspace(0.0, T, n_samples)
    y, yp = res.sol(ts)
    eta = np.asarray(eta_of_s(damping, ts))
    eta_T = float(eta_of_s(damping, T))
    arg = lam * (eta_T - eta[:-1])   # skip t=T where both sides vanish
    c_low = float(np.min(np.minimum(lam * y[:-1] / np.sinh(arg),
                                    -yp[:-1] / np.cosh(arg))))
    return ComparisonSolution(lam=lam, direction="backward", T=T,
                              t=ts, y=y, yp=yp, eta=eta,
                              c_low=c_low, delta1=damping.delta1)


# -- blow-up ODE ---------------------------------------------------------------

@dataclass(frozen=True)
class KatoProblem:
    """F'' = k (1+t)^-alpha F^beta with seed F(0) = f0, F'(0) = f0p."""

    a: float
    alpha: float
    beta: float
    k: float = 1.0
    f0: float = 1.0
    f0p: float = 0.0

    def __post_init__(self):
        if self.beta <= 1 or self.a < 1:
            raise DomainError("need beta > 1 and a >= 1")
        if (self.beta - 1.0) * self.a <= self.alpha - 2.0:
            raise DomainError("hypothesis (beta-1) a > alpha - 2 violated")

    @property
    def theory_exponent(self) -> float:
        """Slope of log T_b vs log delta predicted for F >= delta (t+1)^a."""
        return -(self.beta - 1.0) / ((self.beta - 1.0) * self.a - self.alpha + 2.0)


@dataclass(frozen=True)
class KatoResult:
    blew_up: bool
    t_blowup: float | None
    crossings: tuple[float, ...]
    thresholds: tuple[float, ...]


_THRESHOLDS = (1e8, 1e10, 1e12)


def _aitken(t1: float, t2: float, t3: float) -> float:
    """Geometric-sequence extrapolation of the accumulation point."""
    denom = t3 - 2.0 * t2 + t1
    if denom == 0.0:
        return t3
    return (t1 * t3 - t2 * t2) / denom


def kato_blowup_time(problem: KatoProblem, tolerance: float = 1e-10,
                     t_budget: float = 1e6) -> KatoResult:
    """Numerical blow-up time via threshold crossings at 1e8/1e10/1e12.

    The three crossing times accumulate geometrically at the vertical
    asymptote, so Aitken extrapolation removes the leading threshold bias.
    """
    p = problem

    def rhs(t, z):
        return [z[1], p.k * (1.0 + t) ** (-p.alpha) * z[0] ** p.beta]

    events = []
    for thr in _THRESHOLDS:
        ev = (lambda thr: lambda t, z: z[0] - thr)(thr)
        ev.direction = 1
        events.append(ev)
    events[-1].terminal = True

    res = solve_ivp(rhs, (0.0, t_budget), [p.f0, p.f0p], method="RK45",
                    rtol=tolerance, atol=tolerance * p.f0, events=events,
                    max_step=t_budget / 16.0)
    crossings = tuple(float(ev[0]) for ev in res.t_events if len(ev))
    if len(crossings) < 3:
        return KatoResult(blew_up=False, t_blowup=None,
                          crossings=crossings, thresholds=_THRESHOLDS)
    tb = _aitken(*crossings[:3])
    return KatoResult(blew_up=True, t_blowup=float(tb),
                      crossings=crossings[:3], thresholds=_THRESHOLDS)


def kato_delta_sweep(a: float, alpha: float, beta: float,
                     deltas: np.ndarray, k: float = 1.0,
                     tolerance: float = 1e-10):
    """Blow-up times over a delta grid plus the fitted log-log slope.

    Seeds F(0) = F'(0) = delta, matching the lemma's hypothesis at a = 1.
    """
    deltas = np.asarray(deltas, dtype=float)
    times = []
    for d in deltas:
        prob = KatoProblem(a=a, alpha=alpha, beta=beta, k=k, f0=d, f0p=d)
        res = kato_blowup_time(prob, tolerance=tolerance)
        if not res.blew_up:
            raise IntegrationError(f"no blow-up for delta={d:g} within budget")
        times.append(res.t_blowup)
    times = np.asarray(times)
    slope, intercept = np.polyfit(np.log(deltas), np.log(times), 1)
    return times, float(slope), float(intercept)
