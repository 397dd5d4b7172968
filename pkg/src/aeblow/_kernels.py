"""Time-stepping kernels for the radial wave solver.

Two interchangeable implementations of one velocity-Verlet segment advance:
a numba @njit loop (default) and a pure-numpy fallback.  Selection is made at
import time from the AEBLOW_NUMBA environment variable ("0", "false" or "off"
forces the numpy path); benchmarks/bench_kernels.py times both.

State per node: u, v = du/dt, a = d2u/dt2.  One step m -> m+1:

    vh = v + dt/2 a
    u  = u + dt vh
    f  = msq[m+1] (L u + nl |u|^p)          L = radial divergence-form stencil
    v  = (vh + dt/2 f) / (1 + bh[m+1])      bh = b(t) dt / 2 (semi-implicit)
    a  = f - (2 bh[m+1]/dt) v

which is plain Stoermer-Verlet when b = 0.  The kernel also accumulates the
per-step scalars (sup|u|, integral of u, of |u|^p, of u*phi*esc
with the caller-supplied per-step scale esc) and tracks the
support edge so the active window follows the light cone.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = ["advance_segment", "advance_segment_numba", "advance_segment_numpy",
           "NUMBA_ENABLED"]

_EDGE_REL = 1e-12   # "numerically zero" support threshold, relative to sup|u|
_EDGE_PAD = 8       # extra active cells beyond the measured support edge


def _advance_py(u, v, a, A, B, C, V, phiV, esc, msq, bh, dt, p, nonlin,
                m0, nsteps, sup_cap, rec_sup, rec_F, rec_Ip, rec_G,
                rec_edge, edge):
    """Advance nsteps; record scalars at global indices m0+1..; return status.

    status: 0 completed, 1 sup cap exceeded (blow-up), 2 non-finite values.
    Shared by both implementations through identical semantics.
    """
    N = u.shape[0] - 1
    half = 0.5 * dt
    status = 0
    m_done = m0
    for step in range(nsteps):
        m = m0 + step + 1
        nact = edge + _EDGE_PAD
        if nact > N - 1:
            nact = N - 1
        c1 = msq[m]
        b1 = bh[m]
        em = esc[m]
        for i in range(nact + 1):
            vh = v[i] + half * a[i]
            a[i] = vh                      # a reused as vh scratch
            u[i] = u[i] + dt * vh
        sup = 0.0
        Fs = 0.0
        Ips = 0.0
        Gs = 0.0
        for i in range(nact + 1):
            if i == 0:
                lap = A[0] * (u[1] - u[0])
            else:
                lap = A[i] * u[i + 1] + B[i] * u[i] + C[i] * u[i - 1]
            ui = u[i]
            absu = abs(ui)
            src = absu ** p if nonlin else 0.0
            f = c1 * (lap + src)
            vn = (a[i] + half * f) / (1.0 + b1)
            v[i] = vn
            a[i] = f - (2.0 * b1 / dt) * vn
            if absu > sup:
                sup = absu
            Fs += ui * V[i]
            Ips += absu ** p * V[i]
            Gs += ui * (phiV[i] * em)
        thr = _EDGE_REL * sup
        e = nact
        while e > 0 and abs(u[e]) <= thr:
            e -= 1
        edge = e
        rec_sup[m] = sup
        rec_F[m] = Fs
        rec_Ip[m] = Ips
        rec_G[m] = Gs
        rec_edge[m] = edge
        m_done = m
        if not np.isfinite(sup):
            status = 2
            break
        if sup > sup_cap:
            status = 1
            break
    return m_done, status, edge


def advance_segment_numpy(u, v, a, A, B, C, V, phiV, esc, msq, bh, dt, p, nonlin,
                          m0, nsteps, sup_cap, rec_sup, rec_F, rec_Ip, rec_G,
                          rec_edge, edge):
    """Vectorized fallback: full-grid updates, identical update formulas."""
    N = u.shape[0] - 1
    half = 0.5 * dt
    status = 0
    m_done = m0
    lap = np.empty_like(u)
    for step in range(nsteps):
        m = m0 + step + 1
        c1 = msq[m]
        b1 = bh[m]
        vh = v + half * a
        u += dt * vh
        u[N] = 0.0
        lap[0] = A[0] * (u[1] - u[0])
        lap[1:N] = A[1:N] * u[2:N + 1] + B[1:N] * u[1:N] + C[1:N] * u[0:N - 1]
        lap[N] = 0.0
        absu = np.abs(u)
        f = c1 * (lap + absu ** p) if nonlin else c1 * lap
        v[:] = (vh + half * f) / (1.0 + b1)
        a[:] = f - (2.0 * b1 / dt) * v
        v[N] = 0.0
        a[N] = 0.0
        sup = float(np.max(absu))
        nz = np.nonzero(absu > _EDGE_REL * sup)[0]
        edge = int(nz[-1]) if len(nz) else 0
        rec_sup[m] = sup
        rec_F[m] = float(u @ V)
        rec_Ip[m] = float(absu ** p @ V)
        rec_G[m] = float(u @ (phiV * esc[m]))
        rec_edge[m] = edge
        m_done = m
        if not np.isfinite(sup):
            status = 2
            break
        if sup > sup_cap:
            status = 1
            break
    return m_done, status, edge


def _truthy(s: str) -> bool:
    return s.strip().lower() not in ("0", "false", "off", "no", "")


NUMBA_ENABLED = _truthy(os.environ.get("AEBLOW_NUMBA", "1"))

if NUMBA_ENABLED:
    try:
        import numba as nb
        advance_segment_numba = nb.njit(cache=True, fastmath=False)(_advance_py)
    except ImportError:       # pragma: no cover - numba is a hard dep normally
        NUMBA_ENABLED = False
        advance_segment_numba = _advance_py
else:
    advance_segment_numba = _advance_py

advance_segment = advance_segment_numba if NUMBA_ENABLED else advance_segment_numpy
