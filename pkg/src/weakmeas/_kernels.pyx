# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled stepping loops.  Mirrors ``_kernels_py`` operation for operation."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, log1p, sqrt, fabs

cnp.import_array()

BACKEND = "cython"


cdef inline double _lss(double x) noexcept nogil:
    cdef double a = fabs(x)
    return -(a + 2.0 * log1p(exp(-a)))


cdef inline double _sigmoid(double x) noexcept nogil:
    cdef double e
    if x >= 0:
        return 1.0 / (1.0 + exp(-x))
    e = exp(x)
    return e / (1.0 + e)


cdef inline void _rotate(double* s11, double* re, double* im, double[:, ::1] m) noexcept nogil:
    cdef double x = 2.0 * re[0]
    cdef double y = 2.0 * im[0]
    cdef double z = 2.0 * s11[0] - 1.0
    cdef double xn = m[0, 0] * x + m[0, 1] * y + m[0, 2] * z
    cdef double yn = m[1, 0] * x + m[1, 1] * y + m[1, 2] * z
    cdef double zn = m[2, 0] * x + m[2, 1] * y + m[2, 2] * z
    s11[0] = 0.5 * (1.0 + zn)
    if s11[0] > 1.0:
        s11[0] = 1.0
    elif s11[0] < 0.0:
        s11[0] = 0.0
    re[0] = 0.5 * xn
    im[0] = 0.5 * yn


def simulate_batch(
    int scheme,
    double[:, ::1] states0,
    double[:, ::1] u,
    double[:, ::1] z,
    double dt,
    double eps,
    double h,
    double hbar,
    double i0,
    double di,
    double si,
    double gamma,
    double[:, ::1] half_rot,
    bint rotate,
):
    """Advance ``n`` trajectories through ``u.shape[1]`` steps.

    scheme 0: symmetric split (half rotation, Bayes window, half rotation).
    scheme 1: explicit Euler step of the Langevin equations.
    Returns ``(states[n, steps+1, 3], currents[n, steps])``.
    """
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t steps = u.shape[1]
    out_states = np.empty((n, steps + 1, 3))
    out_currents = np.empty((n, steps))
    cdef double[:, :, ::1] st = out_states
    cdef double[:, ::1] cur = out_currents
    cdef Py_ssize_t k, j
    cdef double s11, s22, re, im, mean, i_avg, lo, ln, scale
    cdef double xi, dev, r, kk, ds11, dre, dim, bound, mod2
    cdef double sd = sqrt(si / (2.0 * dt))
    cdef double i1 = i0 - 0.5 * di
    cdef double i2 = i0 + 0.5 * di
    cdef double damp = exp(-gamma * dt)
    cdef bint damped = gamma > 0.0
    cdef bint measuring = di != 0.0

    with nogil:
        for k in range(n):
            s11 = states0[k, 0]
            re = states0[k, 1]
            im = states0[k, 2]
            st[k, 0, 0] = s11
            st[k, 0, 1] = re
            st[k, 0, 2] = im
            for j in range(steps):
                if scheme == 0:
                    if rotate:
                        _rotate(&s11, &re, &im, half_rot)
                    if u[k, j] < s11:
                        mean = i1
                    else:
                        mean = i2
                    i_avg = mean + sd * z[k, j]
                    if measuring and s11 > 0.0 and s11 < 1.0:
                        lo = log(s11) - log1p(-s11)
                        ln = lo + -2.0 * di * (i_avg - i0) * dt / si
                        scale = exp(0.5 * (_lss(ln) - _lss(lo)))
                        s11 = _sigmoid(ln)
                        re = re * scale
                        im = im * scale
                    if damped:
                        re = re * damp
                        im = im * damp
                    if rotate:
                        _rotate(&s11, &re, &im, half_rot)
                else:
                    s22 = 1.0 - s11
                    xi = sd * z[k, j]
                    dev = (s22 - s11) * di / 2.0 + xi
                    if s11 > 0.0 and s11 < 1.0:
                        r = -s11 * s22 * (2.0 * di / si) * dev
                        kk = -(s22 - s11) * (di / si) * dev
                    else:
                        r = 0.0
                        kk = 0.0
                    ds11 = (-2.0 * h / hbar) * im + r
                    dre = -(eps / hbar) * im + kk * re - gamma * re
                    dim = (eps / hbar) * re + (h / hbar) * (s11 - s22) + kk * im - gamma * im
                    s11 = s11 + dt * ds11
                    re = re + dt * dre
                    im = im + dt * dim
                    if s11 < 0.0:
                        s11 = 0.0
                    elif s11 > 1.0:
                        s11 = 1.0
                    bound = s11 * (1.0 - s11)
                    mod2 = re * re + im * im
                    if mod2 > bound:
                        scale = sqrt(bound / mod2)
                        re = re * scale
                        im = im * scale
                    i_avg = i0 + dev
                cur[k, j] = i_avg
                st[k, j + 1, 0] = s11
                st[k, j + 1, 1] = re
                st[k, j + 1, 2] = im
    return out_states, out_currents
