"""Pure numpy stepping loops, vectorised across trajectories.

Same call signature and arithmetic as the compiled ``_kernels`` module; used
when the extension is not built or ``WEAKMEAS_BACKEND=python`` is set.
"""

import math

import numpy as np

BACKEND = "python"


def _lss(x):
    a = np.abs(x)
    return -(a + 2.0 * np.log1p(np.exp(-a)))


def _sigmoid(x):
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def _rotate(s11, re, im, m):
    x = 2.0 * re
    y = 2.0 * im
    z = 2.0 * s11 - 1.0
    xn = m[0, 0] * x + m[0, 1] * y + m[0, 2] * z
    yn = m[1, 0] * x + m[1, 1] * y + m[1, 2] * z
    zn = m[2, 0] * x + m[2, 1] * y + m[2, 2] * z
    return np.clip(0.5 * (1.0 + zn), 0.0, 1.0), 0.5 * xn, 0.5 * yn


def _lss_scalar(x):
    a = abs(x)
    return -(a + 2.0 * math.log1p(math.exp(-a)))


def _sigmoid_scalar(x):
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def _simulate_one(scheme, state0, u, z, dt, eps, h, hbar, i0, di, si, gamma, m, rotate):
    # Scalar loop for a single trajectory; numpy call overhead dominates otherwise.
    steps = len(u)
    out_states = np.empty((steps + 1, 3))
    out_currents = np.empty(steps)
    s11, re, im = (float(v) for v in state0)
    out_states[0] = (s11, re, im)
    m = [[float(v) for v in row] for row in m]
    u = u.tolist()
    z = z.tolist()
    sd = math.sqrt(si / (2.0 * dt))
    i1 = i0 - 0.5 * di
    i2 = i0 + 0.5 * di
    damp = math.exp(-gamma * dt)

    def rot(s11, re, im):
        x = 2.0 * re
        y = 2.0 * im
        zz = 2.0 * s11 - 1.0
        xn = m[0][0] * x + m[0][1] * y + m[0][2] * zz
        yn = m[1][0] * x + m[1][1] * y + m[1][2] * zz
        zn = m[2][0] * x + m[2][1] * y + m[2][2] * zz
        return min(max(0.5 * (1.0 + zn), 0.0), 1.0), 0.5 * xn, 0.5 * yn

    for j in range(steps):
        if scheme == 0:
            if rotate:
                s11, re, im = rot(s11, re, im)
            mean = i1 if u[j] < s11 else i2
            i_avg = mean + sd * z[j]
            if di != 0.0 and 0.0 < s11 < 1.0:
                lo = math.log(s11) - math.log1p(-s11)
                ln = lo + -2.0 * di * (i_avg - i0) * dt / si
                scale = math.exp(0.5 * (_lss_scalar(ln) - _lss_scalar(lo)))
                s11 = _sigmoid_scalar(ln)
                re = re * scale
                im = im * scale
            if gamma > 0.0:
                re = re * damp
                im = im * damp
            if rotate:
                s11, re, im = rot(s11, re, im)
        else:
            s22 = 1.0 - s11
            dev = (s22 - s11) * di / 2.0 + sd * z[j]
            if 0.0 < s11 < 1.0:
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
                scale = math.sqrt(bound / mod2)
                re = re * scale
                im = im * scale
            i_avg = i0 + dev
        out_currents[j] = i_avg
        out_states[j + 1] = (s11, re, im)
    return out_states, out_currents


def simulate_batch(scheme, states0, u, z, dt, eps, h, hbar, i0, di, si, gamma, half_rot, rotate):
    states0 = np.ascontiguousarray(states0, dtype=float)
    u = np.ascontiguousarray(u, dtype=float)
    z = np.ascontiguousarray(z, dtype=float)
    half_rot = np.asarray(half_rot, dtype=float)
    n, steps = u.shape
    if n == 1:
        st, cur = _simulate_one(scheme, states0[0], u[0], z[0], dt, eps, h, hbar,
                                i0, di, si, gamma, half_rot, rotate)
        return st[None], cur[None]
    out_states = np.empty((n, steps + 1, 3))
    out_currents = np.empty((n, steps))
    s11 = states0[:, 0].copy()
    re = states0[:, 1].copy()
    im = states0[:, 2].copy()
    out_states[:, 0] = states0
    sd = np.sqrt(si / (2.0 * dt))
    i1 = i0 - 0.5 * di
    i2 = i0 + 0.5 * di
    damp = np.exp(-gamma * dt)

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for j in range(steps):
            if scheme == 0:
                if rotate:
                    s11, re, im = _rotate(s11, re, im, half_rot)
                mean = np.where(u[:, j] < s11, i1, i2)
                i_avg = mean + sd * z[:, j]
                if di != 0.0:
                    inside = (s11 > 0.0) & (s11 < 1.0)
                    lo = np.log(s11) - np.log1p(-s11)
                    ln = lo + -2.0 * di * (i_avg - i0) * dt / si
                    scale = np.exp(0.5 * (_lss(ln) - _lss(lo)))
                    s11 = np.where(inside, _sigmoid(ln), s11)
                    re = np.where(inside, re * scale, re)
                    im = np.where(inside, im * scale, im)
                if gamma > 0.0:
                    re = re * damp
                    im = im * damp
                if rotate:
                    s11, re, im = _rotate(s11, re, im, half_rot)
            else:
                s22 = 1.0 - s11
                xi = sd * z[:, j]
                dev = (s22 - s11) * di / 2.0 + xi
                inside = (s11 > 0.0) & (s11 < 1.0)
                r = np.where(inside, -s11 * s22 * (2.0 * di / si) * dev, 0.0)
                kk = np.where(inside, -(s22 - s11) * (di / si) * dev, 0.0)
                ds11 = (-2.0 * h / hbar) * im + r
                dre = -(eps / hbar) * im + kk * re - gamma * re
                dim = (eps / hbar) * re + (h / hbar) * (s11 - s22) + kk * im - gamma * im
                s11 = s11 + dt * ds11
                re = re + dt * dre
                im = im + dt * dim
                s11 = np.where(s11 < 0.0, 0.0, np.where(s11 > 1.0, 1.0, s11))
                bound = s11 * (1.0 - s11)
                mod2 = re * re + im * im
                over = mod2 > bound
                scale = np.sqrt(np.where(over, bound / np.where(over, mod2, 1.0), 1.0))
                re = re * scale
                im = im * scale
                i_avg = i0 + dev
            out_currents[:, j] = i_avg
            out_states[:, j + 1, 0] = s11
            out_states[:, j + 1, 1] = re
            out_states[:, j + 1, 2] = im
    return out_states, out_currents
