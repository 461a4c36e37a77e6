"""Pure-numpy Bloch propagation kernel, reference implementation.

The compiled module `_kernel` implements the same contract; backend selection
happens in `chirpmem.ensemble`.  Both record the weighted transverse sums
sum_i wg_i*(sx_i, sy_i) at sample indices m in {offset, offset+stride, ...}
within [0, n_t - 2]; the final sample of a window is owned by the caller.
"""

from __future__ import annotations

import numpy as np

TWO_PI = 2.0 * np.pi

BACKEND = "python"


def rk4_window(bloch, delta, scale, wg, w_re, w_im, dt, stride, offset, rec_re, rec_im):
    """Advance a chunk of spins through one drive window with fixed-step RK4.

    bloch: (n, 3) in/out.  delta (Hz), scale (drive multiplier), wg (record
    weight) per spin.  w_re/w_im: drive samples in Hz, length n_t.  Drive values
    between samples are the midpoint average (piecewise-linear drive).
    """
    n_t = w_re.shape[0]
    x = bloch[:, 0].copy()
    y = bloch[:, 1].copy()
    z = bloch[:, 2].copy()
    bz = TWO_PI * delta
    sc = TWO_PI * scale
    half = 0.5 * dt
    sixth = dt / 6.0

    for m in range(n_t - 1):
        if m >= offset and (m - offset) % stride == 0:
            j = (m - offset) // stride
            rec_re[j] += np.sum(wg * x)
            rec_im[j] += np.sum(wg * y)
        bx0 = sc * w_re[m]
        by0 = sc * w_im[m]
        bxm = sc * (0.5 * (w_re[m] + w_re[m + 1]))
        bym = sc * (0.5 * (w_im[m] + w_im[m + 1]))
        bx1 = sc * w_re[m + 1]
        by1 = sc * w_im[m + 1]

        k1x = by0 * z - bz * y
        k1y = bz * x - bx0 * z
        k1z = bx0 * y - by0 * x

        x2 = x + half * k1x
        y2 = y + half * k1y
        z2 = z + half * k1z
        k2x = bym * z2 - bz * y2
        k2y = bz * x2 - bxm * z2
        k2z = bxm * y2 - bym * x2

        x3 = x + half * k2x
        y3 = y + half * k2y
        z3 = z + half * k2z
        k3x = bym * z3 - bz * y3
        k3y = bz * x3 - bxm * z3
        k3z = bxm * y3 - bym * x3

        x4 = x + dt * k3x
        y4 = y + dt * k3y
        z4 = z + dt * k3z
        k4x = by1 * z4 - bz * y4
        k4y = bz * x4 - bx1 * z4
        k4z = bx1 * y4 - by1 * x4

        x = x + sixth * (k1x + 2.0 * (k2x + k3x) + k4x)
        y = y + sixth * (k1y + 2.0 * (k2y + k3y) + k4y)
        z = z + sixth * (k1z + 2.0 * (k2z + k3z) + k4z)

    bloch[:, 0] = x
    bloch[:, 1] = y
    bloch[:, 2] = z


def free_record(bloch, delta, wg, t_rel, rec_re, rec_im):
    """Accumulate the weighted transverse sums at times t_rel of free evolution
    from the current states, without advancing them."""
    c = wg * (bloch[:, 0] + 1j * bloch[:, 1])
    for j in range(t_rel.shape[0]):
        rot = np.exp(1j * TWO_PI * t_rel[j] * delta)
        val = np.sum(c * rot)
        rec_re[j] += val.real
        rec_im[j] += val.imag


def free_advance(bloch, delta, dt_total):
    """Exact z-rotation by 2*pi*delta*dt_total, in place."""
    ang = TWO_PI * delta * dt_total
    ca = np.cos(ang)
    sa = np.sin(ang)
    x = bloch[:, 0].copy()
    y = bloch[:, 1].copy()
    bloch[:, 0] = ca * x - sa * y
    bloch[:, 1] = sa * x + ca * y
