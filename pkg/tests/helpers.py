"""Shared test utilities, including an independent fine-tolerance Bloch
propagator (scipy adaptive integration, not the package kernel) used as the
oracle for propagation and phase checks."""

from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp

TWO_PI = 2.0 * np.pi


def oracle_propagate(waveform, delta_hz: float, s0, rtol=1e-10, atol=1e-12):
    """Independent single-spin Bloch integration through a sampled drive
    (piecewise-linear interpolation), from the waveform grid start to its end."""
    w = waveform.samples
    dt = waveform.grid.dt
    t0 = waveform.grid.t_start
    n = len(w)

    def rhs(t, s):
        x = (t - t0) / dt
        k = min(int(x), n - 2)
        fr = x - k
        wv = w[k] * (1 - fr) + w[k + 1] * fr
        bx = TWO_PI * wv.real
        by = TWO_PI * wv.imag
        bz = TWO_PI * delta_hz
        return [by * s[2] - bz * s[1], bz * s[0] - bx * s[2],
                bx * s[1] - by * s[0]]

    sol = solve_ivp(rhs, (t0, waveform.grid.t_end), list(s0), rtol=rtol, atol=atol)
    return sol.y[:, -1]


def coherence_response(waveform, delta_hz: float, eps: float = 0.05, **kw):
    """Linear-response coherence transfer through a drive: propagate +-eps
    tipped states and difference them, returning (c_out, c_in)."""
    out = []
    for s in (eps, -eps):
        s0 = (s, 0.0, -np.sqrt(1 - s**2))
        y = oracle_propagate(waveform, delta_hz, s0, **kw)
        out.append(y[0] + 1j * y[1])
    return (out[0] - out[1]) / 2.0, eps


def wrap(x):
    return np.angle(np.exp(1j * np.asarray(x)))
