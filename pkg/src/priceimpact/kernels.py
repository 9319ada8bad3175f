"""Fixed-step RK4 kernels for the time-reversed equilibrium ODE system.

State in reversed time s = T - t:

    h' = (2/alpha) g h
    f' = 1 + f (b h - C0)
    g' = s2a f - (2/alpha) g^2 + g (b h - C0)

with b = a^2 sigma_D^2 / (2I) and s2a = a sigma_D^2.  The full kernel also
carries q2(s) = Q2(T - s) and q(s) = Q(T - s); both are linear in themselves
and only needed once the shooting has fixed h(0).

Every kernel exists twice: a scalar-loop version compiled with numba and a
numpy version that is vectorised across initial values (used for
multisection when numba is unavailable).  Status codes: 0 ok, 1 positivity
violation, 2 non-finite state, 3 h exceeded the cap (reported as +inf;
h never decreases, so the terminal value is known to lie above the cap).
"""

import math

import numpy as np

from . import _accel
from ._accel import njit

OK, POSITIVITY, NONFINITE, CAPPED = 0, 1, 2, 3

# coefficient vector layout shared by all kernels
# [alpha, b, C0, s2a, c2, mu_D, L, I, a, delta, sigma_Y, mu_Y]
N_COEF = 12


@njit(inline="always")
def _rhs3(h, f, g, alpha, b, C0, s2a):
    lin = b * h - C0
    dh = 2.0 * g * h / alpha
    df = 1.0 + f * lin
    dg = s2a * f - 2.0 * g * g / alpha + g * lin
    return dh, df, dg


@njit
def _hfg_terminal_jit(h0s, n_steps, dt, coef, h_cap):
    alpha, b, C0, s2a = coef[0], coef[1], coef[2], coef[3]
    m = h0s.shape[0]
    hT = np.empty(m)
    status = np.zeros(m, dtype=np.int64)
    where = np.full(m, -1, dtype=np.int64)
    half = 0.5 * dt
    for j in range(m):
        h = h0s[j]
        f = 1.0
        g = 0.0
        for n in range(n_steps):
            k1h, k1f, k1g = _rhs3(h, f, g, alpha, b, C0, s2a)
            k2h, k2f, k2g = _rhs3(h + half * k1h, f + half * k1f, g + half * k1g,
                                  alpha, b, C0, s2a)
            k3h, k3f, k3g = _rhs3(h + half * k2h, f + half * k2f, g + half * k2g,
                                  alpha, b, C0, s2a)
            k4h, k4f, k4g = _rhs3(h + dt * k3h, f + dt * k3f, g + dt * k3g,
                                  alpha, b, C0, s2a)
            h += dt / 6.0 * (k1h + 2.0 * k2h + 2.0 * k3h + k4h)
            f += dt / 6.0 * (k1f + 2.0 * k2f + 2.0 * k3f + k4f)
            g += dt / 6.0 * (k1g + 2.0 * k2g + 2.0 * k3g + k4g)
            if not (math.isfinite(h) and math.isfinite(f) and math.isfinite(g)):
                status[j] = NONFINITE
                where[j] = n + 1
                break
            if h < 0.0 or f <= 0.0 or g < 0.0:
                status[j] = POSITIVITY
                where[j] = n + 1
                break
            if h > h_cap:
                status[j] = CAPPED
                where[j] = n + 1
                h = np.inf
                break
        hT[j] = h
    return hT, status, where


def _hfg_terminal_np(h0s, n_steps, dt, coef, h_cap):
    alpha, b, C0, s2a = (float(c) for c in coef[:4])
    h = np.array(h0s, dtype=float)
    f = np.ones_like(h)
    g = np.zeros_like(h)
    m = h.shape[0]
    status = np.zeros(m, dtype=np.int64)
    where = np.full(m, -1, dtype=np.int64)
    alive = np.ones(m, dtype=bool)
    half = 0.5 * dt

    def rhs(h, f, g):
        lin = b * h - C0
        return 2.0 * g * h / alpha, 1.0 + f * lin, s2a * f - 2.0 * g * g / alpha + g * lin

    with np.errstate(all="ignore"):
        for n in range(n_steps):
            k1 = rhs(h, f, g)
            k2 = rhs(h + half * k1[0], f + half * k1[1], g + half * k1[2])
            k3 = rhs(h + half * k2[0], f + half * k2[1], g + half * k2[2])
            k4 = rhs(h + dt * k3[0], f + dt * k3[1], g + dt * k3[2])
            hn = h + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
            fn = f + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
            gn = g + dt / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
            bad_nf = alive & ~(np.isfinite(hn) & np.isfinite(fn) & np.isfinite(gn))
            bad_pos = alive & ~bad_nf & ((hn < 0.0) | (fn <= 0.0) | (gn < 0.0))
            capped = alive & ~bad_nf & ~bad_pos & (hn > h_cap)
            stop = bad_nf | bad_pos | capped
            if stop.any():
                status[bad_nf] = NONFINITE
                status[bad_pos] = POSITIVITY
                status[capped] = CAPPED
                hn = np.where(capped, np.inf, hn)
                h = np.where(capped, np.inf, h)
                where[stop] = n + 1
                alive &= ~stop
                if not alive.any():
                    break
            # frozen entries keep their last admissible value
            h = np.where(alive, hn, h)
            f = np.where(alive, fn, f)
            g = np.where(alive, gn, g)
    return h, status, where


@njit(inline="always")
def _rhs5(h, f, g, q2, q, coef):
    alpha, b, C0, s2a = coef[0], coef[1], coef[2], coef[3]
    c2, mu_D, L, I = coef[4], coef[5], coef[6], coef[7]
    a, delta, sigma_Y, mu_Y = coef[8], coef[9], coef[10], coef[11]
    lin = b * h - C0
    dh = 2.0 * g * h / alpha
    df = 1.0 + f * lin
    dg = s2a * f - 2.0 * g * g / alpha + g * lin
    # F Q22^2 = g^2 / f
    fq = g * g / f
    dQ2 = c2 + 2.0 * L * fq / (alpha * I) + q2 / f - mu_D
    dQ = (-delta / a + (a * q + math.log(f) + 1.0) / (a * f)
          + 0.5 * a * sigma_Y * sigma_Y - L * L * fq / (alpha * I * I) - mu_Y)
    return dh, df, dg, -dQ2, -dQ


@njit
def _full_jit(h0, n_steps, dt, coef):
    out = np.empty((n_steps + 1, 5))
    h, f, g, q2, q = h0, 1.0, 0.0, 0.0, 0.0
    out[0, 0] = h
    out[0, 1] = f
    out[0, 2] = g
    out[0, 3] = q2
    out[0, 4] = q
    half = 0.5 * dt
    for n in range(n_steps):
        a1, b1, c1, d1, e1 = _rhs5(h, f, g, q2, q, coef)
        a2, b2, c2, d2, e2 = _rhs5(h + half * a1, f + half * b1, g + half * c1,
                                   q2 + half * d1, q + half * e1, coef)
        a3, b3, c3, d3, e3 = _rhs5(h + half * a2, f + half * b2, g + half * c2,
                                   q2 + half * d2, q + half * e2, coef)
        a4, b4, c4, d4, e4 = _rhs5(h + dt * a3, f + dt * b3, g + dt * c3,
                                   q2 + dt * d3, q + dt * e3, coef)
        h += dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        f += dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
        g += dt / 6.0 * (c1 + 2.0 * c2 + 2.0 * c3 + c4)
        q2 += dt / 6.0 * (d1 + 2.0 * d2 + 2.0 * d3 + d4)
        q += dt / 6.0 * (e1 + 2.0 * e2 + 2.0 * e3 + e4)
        out[n + 1, 0] = h
        out[n + 1, 1] = f
        out[n + 1, 2] = g
        out[n + 1, 3] = q2
        out[n + 1, 4] = q
        if not (math.isfinite(h) and math.isfinite(f) and math.isfinite(g)
                and math.isfinite(q2) and math.isfinite(q)):
            return out, NONFINITE, n + 1
        if h < 0.0 or f <= 0.0 or g < 0.0:
            return out, POSITIVITY, n + 1
    return out, OK, -1


def _full_np(h0, n_steps, dt, coef):
    # plain-float loop: for a single trajectory this beats tiny numpy arrays
    alpha, b, C0, s2a, c2, mu_D, L, I, a, delta, sigma_Y, mu_Y = (float(c) for c in coef)
    log = math.log
    isfinite = math.isfinite

    def rhs(h, f, g, q2, q):
        lin = b * h - C0
        fq = g * g / f
        return (2.0 * g * h / alpha,
                1.0 + f * lin,
                s2a * f - 2.0 * g * g / alpha + g * lin,
                -(c2 + 2.0 * L * fq / (alpha * I) + q2 / f - mu_D),
                -(-delta / a + (a * q + log(f) + 1.0) / (a * f)
                  + 0.5 * a * sigma_Y * sigma_Y - L * L * fq / (alpha * I * I) - mu_Y))

    out = np.empty((n_steps + 1, 5))
    y = [float(h0), 1.0, 0.0, 0.0, 0.0]
    out[0] = y
    half = 0.5 * dt
    sixth = dt / 6.0
    for n in range(n_steps):
        k1 = rhs(*y)
        k2 = rhs(*[y[i] + half * k1[i] for i in range(5)])
        k3 = rhs(*[y[i] + half * k2[i] for i in range(5)])
        k4 = rhs(*[y[i] + dt * k3[i] for i in range(5)])
        y = [y[i] + sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) for i in range(5)]
        out[n + 1] = y
        if not all(isfinite(v) for v in y):
            return out, NONFINITE, n + 1
        if y[0] < 0.0 or y[1] <= 0.0 or y[2] < 0.0:
            return out, POSITIVITY, n + 1
    return out, OK, -1


def hfg_terminal(h0s, n_steps, dt, coef, h_cap=np.inf, backend=None):
    """Integrate (h, f, g) from each initial h in ``h0s``; return h at the end
    of the mesh plus per-candidate status codes and failing step indices."""
    backend = backend or _accel.BACKEND
    h0s = np.ascontiguousarray(h0s, dtype=float)
    coef = np.ascontiguousarray(coef, dtype=float)
    if backend == "numba":
        return _hfg_terminal_jit(h0s, int(n_steps), float(dt), coef, float(h_cap))
    return _hfg_terminal_np(h0s, int(n_steps), float(dt), coef, float(h_cap))


def full_trajectory(h0, n_steps, dt, coef, backend=None):
    """Integrate all five reversed components, storing every node."""
    backend = backend or _accel.BACKEND
    coef = np.ascontiguousarray(coef, dtype=float)
    if backend == "numba":
        out, status, where = _full_jit(float(h0), int(n_steps), float(dt), coef)
    else:
        out, status, where = _full_np(float(h0), int(n_steps), float(dt), coef)
    return out, int(status), int(where)
