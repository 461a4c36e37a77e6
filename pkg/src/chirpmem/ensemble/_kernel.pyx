# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Bloch propagation kernel.  Same contract as _kernel_py; see there
for documentation.  All loops run without the GIL so chunks can be dispatched
across threads."""

from libc.math cimport cos, sin

cdef double TWO_PI = 6.283185307179586476925287

BACKEND = "cython"


cdef void _rk4_window(double[:, ::1] bloch, double[::1] delta, double[::1] scale,
                      double[::1] wg, double[::1] w_re, double[::1] w_im,
                      double dt, Py_ssize_t stride, Py_ssize_t offset,
                      double[::1] rec_re, double[::1] rec_im) noexcept nogil:
    cdef Py_ssize_t n = bloch.shape[0]
    cdef Py_ssize_t n_t = w_re.shape[0]
    cdef Py_ssize_t m, i, j
    cdef double half = 0.5 * dt
    cdef double sixth = dt / 6.0
    cdef double wr0, wi0, wrm, wim_, wr1, wi1
    cdef double bx0, by0, bxm, bym, bx1, by1, bz, sc
    cdef double x, y, z
    cdef double k1x, k1y, k1z, k2x, k2y, k2z, k3x, k3y, k3z, k4x, k4y, k4z
    cdef double x2, y2, z2, sum_x, sum_y

    for m in range(n_t - 1):
        if m >= offset and (m - offset) % stride == 0:
            j = (m - offset) // stride
            sum_x = 0.0
            sum_y = 0.0
            for i in range(n):
                sum_x += wg[i] * bloch[i, 0]
                sum_y += wg[i] * bloch[i, 1]
            rec_re[j] += sum_x
            rec_im[j] += sum_y
        wr0 = w_re[m]
        wi0 = w_im[m]
        wr1 = w_re[m + 1]
        wi1 = w_im[m + 1]
        wrm = 0.5 * (wr0 + wr1)
        wim_ = 0.5 * (wi0 + wi1)
        for i in range(n):
            sc = TWO_PI * scale[i]
            bz = TWO_PI * delta[i]
            bx0 = sc * wr0
            by0 = sc * wi0
            bxm = sc * wrm
            bym = sc * wim_
            bx1 = sc * wr1
            by1 = sc * wi1
            x = bloch[i, 0]
            y = bloch[i, 1]
            z = bloch[i, 2]

            k1x = by0 * z - bz * y
            k1y = bz * x - bx0 * z
            k1z = bx0 * y - by0 * x

            x2 = x + half * k1x
            y2 = y + half * k1y
            z2 = z + half * k1z
            k2x = bym * z2 - bz * y2
            k2y = bz * x2 - bxm * z2
            k2z = bxm * y2 - bym * x2

            x2 = x + half * k2x
            y2 = y + half * k2y
            z2 = z + half * k2z
            k3x = bym * z2 - bz * y2
            k3y = bz * x2 - bxm * z2
            k3z = bxm * y2 - bym * x2

            x2 = x + dt * k3x
            y2 = y + dt * k3y
            z2 = z + dt * k3z
            k4x = by1 * z2 - bz * y2
            k4y = bz * x2 - bx1 * z2
            k4z = bx1 * y2 - by1 * x2

            bloch[i, 0] = x + sixth * (k1x + 2.0 * (k2x + k3x) + k4x)
            bloch[i, 1] = y + sixth * (k1y + 2.0 * (k2y + k3y) + k4y)
            bloch[i, 2] = z + sixth * (k1z + 2.0 * (k2z + k3z) + k4z)


cdef void _free_record(double[:, ::1] bloch, double[::1] delta, double[::1] wg,
                       double[::1] t_rel, double[::1] rec_re,
                       double[::1] rec_im) noexcept nogil:
    cdef Py_ssize_t n = bloch.shape[0]
    cdef Py_ssize_t n_j = t_rel.shape[0]
    cdef Py_ssize_t i, j
    cdef double ang, ca, sa, cr, ci, sum_x, sum_y
    for j in range(n_j):
        sum_x = 0.0
        sum_y = 0.0
        for i in range(n):
            ang = TWO_PI * delta[i] * t_rel[j]
            ca = cos(ang)
            sa = sin(ang)
            cr = bloch[i, 0]
            ci = bloch[i, 1]
            sum_x += wg[i] * (ca * cr - sa * ci)
            sum_y += wg[i] * (sa * cr + ca * ci)
        rec_re[j] += sum_x
        rec_im[j] += sum_y


cdef void _free_advance(double[:, ::1] bloch, double[::1] delta,
                        double dt_total) noexcept nogil:
    cdef Py_ssize_t n = bloch.shape[0]
    cdef Py_ssize_t i
    cdef double ang, ca, sa, x, y
    for i in range(n):
        ang = TWO_PI * delta[i] * dt_total
        ca = cos(ang)
        sa = sin(ang)
        x = bloch[i, 0]
        y = bloch[i, 1]
        bloch[i, 0] = ca * x - sa * y
        bloch[i, 1] = sa * x + ca * y


def rk4_window(double[:, ::1] bloch, double[::1] delta, double[::1] scale,
               double[::1] wg, double[::1] w_re, double[::1] w_im,
               double dt, Py_ssize_t stride, Py_ssize_t offset,
               double[::1] rec_re, double[::1] rec_im):
    with nogil:
        _rk4_window(bloch, delta, scale, wg, w_re, w_im, dt, stride, offset,
                    rec_re, rec_im)


def free_record(double[:, ::1] bloch, double[::1] delta, double[::1] wg,
                double[::1] t_rel, double[::1] rec_re, double[::1] rec_im):
    with nogil:
        _free_record(bloch, delta, wg, t_rel, rec_re, rec_im)


def free_advance(double[:, ::1] bloch, double[::1] delta, double dt_total):
    with nogil:
        _free_advance(bloch, delta, dt_total)
