"""Integrable time damping b(t) and the change of variable that removes it.

With m(t) = exp(int_0^t b), s = h(t) = int_0^t 1/m, and eta the inverse of h,
the damped operator d_t^2 + b d_t - Lap becomes d_s^2 - mt(s)^2 Lap with
mt(s) = m(eta(s)) pinned inside [delta1, 1/delta1], delta1 = exp(-||b||_L1).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.interpolate import interp1d

from .errors import ConfigurationError, DomainError, IntegrationError

__all__ = [
    "DampingProfile",
    "zero_damping",
    "scattering_power_damping",
    "signed_oscillatory_damping",
    "tabulated_damping",
    "m_of_t",
    "h_of_t",
    "eta_of_s",
    "m_tilde",
    "damping_from_config",
    "damping_to_config",
]

_ODE_RTOL = 1e-12
_ODE_ATOL = 1e-14


class _Cache:
    """Dense solutions of c' = b (c = int b) and h' = exp(-c), grown on demand."""

    def __init__(self, b: Callable[[float], float]):
        self._b = b
        self.tmax = 0.0
        self._sol = None

    def ensure(self, t: float):
        t = max(float(t), 1.0)
        if self._sol is not None and t <= self.tmax:
            return
        target = max(2.0 * t, 100.0)
        res = solve_ivp(
            lambda tt, y: [self._b(tt), np.exp(-y[0])],
            (0.0, target), [0.0, 0.0],
            method="DOP853", rtol=_ODE_RTOL, atol=_ODE_ATOL, dense_output=True,
        )
        if not res.success:
            raise IntegrationError(f"damping cache integration failed: {res.message}")
        self._sol = res.sol
        self.tmax = target

    def cumb(self, t):
        """int_0^t b."""
        self.ensure(np.max(t) if np.ndim(t) else t)
        return self._sol(np.atleast_1d(t))[0] if np.ndim(t) else float(self._sol(t)[0])

    def h(self, t):
        self.ensure(np.max(t) if np.ndim(t) else t)
        return self._sol(np.atleast_1d(t))[1] if np.ndim(t) else float(self._sol(t)[1])


class _EtaCache:
    """Dense solution of eta'(s) = m(eta(s)), eta(0) = 0."""

    def __init__(self, m: Callable[[float], float], delta1: float):
        self._m = m
        self._delta1 = delta1
        self.smax = 0.0
        self._sol = None

    def ensure(self, s: float):
        s = max(float(s), 1.0)
        if self._sol is not None and s <= self.smax:
            return
        target = max(2.0 * s, 100.0)
        res = solve_ivp(
            lambda ss, y: [self._m(y[0])],
            (0.0, target), [0.0],
            method="DOP853", rtol=_ODE_RTOL, atol=_ODE_ATOL, dense_output=True,
        )
        if not res.success:
            raise IntegrationError(f"eta integration failed: {res.message}")
        self._sol = res.sol
        self.smax = target

    def eta(self, s):
        self.ensure(np.max(s) if np.ndim(s) else s)
        return self._sol(np.atleast_1d(s))[0] if np.ndim(s) else float(self._sol(s)[0])


@dataclass(frozen=True)
class DampingProfile:
    """Immutable integrable damping coefficient.

    kinds: "zero", "scattering-power" (b = mu (1+t)^-beta), "signed-oscillatory"
    (b = mu cos(t) (1+t)^-beta), "tabulated".  l1_norm is a certified bound on
    ||b||_L1 (analytic tail for the power kinds, declared tail for tables).
    """

    kind: str
    mu: float = 0.0
    beta: float = 2.0
    l1_norm: float = 0.0
    table_t: np.ndarray | None = field(default=None, repr=False)
    table_b: np.ndarray | None = field(default=None, repr=False)
    _interp: object | None = field(default=None, repr=False, compare=False)
    _cache: object | None = field(default=None, repr=False, compare=False)
    _eta_cache: object | None = field(default=None, repr=False, compare=False)

    @property
    def delta1(self) -> float:
        return float(np.exp(-self.l1_norm))

    def b(self, t):
        """Evaluate b(t) for t >= 0."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise DomainError("time must be nonnegative")
        if self.kind == "zero":
            out = np.zeros_like(t)
        elif self.kind == "scattering-power":
            out = self.mu * (1.0 + t) ** (-self.beta)
        elif self.kind == "signed-oscillatory":
            out = self.mu * np.cos(t) * (1.0 + t) ** (-self.beta)
        else:
            tmax = self.table_t[-1]
            out = np.where(t <= tmax, self._interp(np.minimum(t, tmax)), 0.0)
        return float(out) if out.ndim == 0 else out


def zero_damping() -> DampingProfile:
    return DampingProfile(kind="zero", l1_norm=0.0)


def _finish(profile: DampingProfile) -> DampingProfile:
    # caches are mutable helpers living on a frozen dataclass; they hold
    # derived state only, so sharing the profile across workers stays safe
    object.__setattr__(profile, "_cache", _Cache(lambda t: profile.b(t)))
    object.__setattr__(profile, "_eta_cache",
                       _EtaCache(lambda t: m_of_t(profile, t), profile.delta1))
    return profile


def scattering_power_damping(mu: float, beta: float) -> DampingProfile:
    """b(t) = mu (1+t)^-beta with beta > 1; ||b||_L1 = |mu|/(beta-1)."""
    if beta <= 1:
        raise DomainError("scattering damping needs beta > 1")
    return _finish(DampingProfile(kind="scattering-power", mu=mu, beta=beta,
                                  l1_norm=abs(mu) / (beta - 1.0)))


def signed_oscillatory_damping(mu: float, beta: float) -> DampingProfile:
    """b(t) = mu cos(t) (1+t)^-beta, beta > 1 -- sign-changing, integrable."""
    if beta <= 1:
        raise DomainError("oscillatory damping needs beta > 1")
    # |b| <= |mu|(1+t)^-beta, so the power-kind tail bound certifies L1
    # integrate |cos| piecewise over its half-periods so quad never fights
    # the oscillation
    edges = np.arange(0.0, 200.0 + math.pi, math.pi / 2.0)
    head = sum(quad(lambda t: abs(mu * math.cos(t)) * (1.0 + t) ** (-beta),
                    a, b, epsabs=1e-13, epsrel=1e-11)[0]
               for a, b in zip(edges[:-1], edges[1:]))
    tail = abs(mu) * (1.0 + 200.0) ** (1.0 - beta) / (beta - 1.0)
    return _finish(DampingProfile(kind="signed-oscillatory", mu=mu, beta=beta,
                                  l1_norm=head + tail))


def tabulated_damping(t, b, tail_l1: float = 0.0) -> DampingProfile:
    """Piecewise-linear b from samples; b = 0 beyond the table.

    tail_l1 is a user-declared bound on the L1 mass beyond the table end.
    """
    t = np.asarray(t, dtype=float)
    b = np.asarray(b, dtype=float)
    if t.ndim != 1 or t.shape != b.shape or len(t) < 2 or t[0] != 0.0:
        raise ConfigurationError("damping table must start at t=0, length >= 2")
    if np.any(np.diff(t) <= 0):
        raise ConfigurationError("damping table times must increase")
    interp = interp1d(t, b, kind="linear", assume_sorted=True)
    l1 = float(np.trapezoid(np.abs(b), t)) + float(tail_l1)
    prof = DampingProfile(kind="tabulated", l1_norm=l1, table_t=t, table_b=b,
                          _interp=interp)
    return _finish(prof)


# -- change-of-variable maps --------------------------------------------------

def m_of_t(profile: DampingProfile, t):
    """m(t) = exp(int_0^t b), the damping integrating factor."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("time must be nonnegative")
    if profile.kind == "zero":
        out = np.ones_like(t)
    elif profile.kind == "scattering-power":
        cumb = profile.mu * (1.0 - (1.0 + t) ** (1.0 - profile.beta)) / (profile.beta - 1.0)
        out = np.exp(cumb)
    else:
        out = np.exp(profile._cache.cumb(t))
    return float(out) if np.ndim(out) == 0 else out


def h_of_t(profile: DampingProfile, t):
    """h(t) = int_0^t 1/m -- the strictly increasing new time variable."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("time must be nonnegative")
    if profile.kind == "zero":
        out = t.copy()
    else:
        out = profile._cache.h(t)
    return float(out) if np.ndim(out) == 0 else out


def eta_of_s(profile: DampingProfile, s):
    """eta(s), inverse of h: eta(h(t)) = t, with eta'(s) = m(eta(s))."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise DomainError("time must be nonnegative")
    if profile.kind == "zero":
        out = s.copy()
    else:
        out = profile._eta_cache.eta(s)
    return float(out) if np.ndim(out) == 0 else out


def m_tilde(profile: DampingProfile, s):
    """mt(s) = m(eta(s)), pinned inside [delta1, 1/delta1]."""
    return m_of_t(profile, eta_of_s(profile, s))


# -- config serialization ------------------------------------------------------

def damping_to_config(profile: DampingProfile) -> dict:
    cfg = {"kind": profile.kind}
    if profile.kind in ("scattering-power", "signed-oscillatory"):
        cfg["mu"] = profile.mu
        cfg["beta"] = profile.beta
    elif profile.kind == "tabulated":
        cfg["table"] = [[float(a), float(b)]
                        for a, b in zip(profile.table_t, profile.table_b)]
    return cfg


def damping_from_config(cfg: dict) -> DampingProfile:
    try:
        kind = cfg["kind"]
    except KeyError:
        raise ConfigurationError("damping config missing key 'kind'") from None
    if kind == "zero":
        return zero_damping()
    if kind in ("scattering-power", "signed-oscillatory"):
        try:
            mu, beta = float(cfg["mu"]), float(cfg["beta"])
        except KeyError as e:
            raise ConfigurationError(f"damping config missing key {e.args[0]!r}") from None
        maker = (scattering_power_damping if kind == "scattering-power"
                 else signed_oscillatory_damping)
        return maker(mu, beta)
    if kind == "tabulated":
        if "table" not in cfg:
            raise ConfigurationError("damping config missing key 'table'")
        tab = np.asarray(cfg["table"], dtype=float)
        return tabulated_damping(tab[:, 0], tab[:, 1],
                                 tail_l1=float(cfg.get("tail_l1", 0.0)))
    raise ConfigurationError(f"unknown damping kind {kind!r}")


def damping_from_json(path: str) -> DampingProfile:
    with open(path) as f:
        return damping_from_config(json.load(f))
