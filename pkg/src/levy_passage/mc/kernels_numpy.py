"""Vectorised numpy kernels with the same semantics as the compiled ones.

All paths of a block advance one inter-jump segment per sweep. The random
streams are consumed in a different order from the scalar kernels, so the
two backends agree in distribution, not bit for bit.
"""

from __future__ import annotations

import numpy as np

from .kernels_numba import CENSORED, HIT, KILLED, coupled_kernel


def draw_jumps(rng, size, cumw, kind, p1, p2, bound, off, deg, coefs) -> np.ndarray:
    comp = np.searchsorted(cumw, rng.random(size), side="left")
    comp = np.minimum(comp, cumw.size - 1)
    out = np.empty(size)
    for i in np.unique(comp):
        sel = np.flatnonzero(comp == i)
        n = sel.size
        kd = kind[i]
        if kd == 0:
            out[sel] = p1[i]
        elif kd == 1:
            out[sel] = rng.standard_gamma(p1[i], n) * p2[i]
        elif kd == 2:
            c = coefs[off[i]:off[i] + deg[i]]
            todo = sel
            while todo.size:
                y = p1[i] + (p2[i] - p1[i]) * rng.random(todo.size)
                ok = rng.random(todo.size) * bound[i] <= np.polynomial.polynomial.polyval(y, c)
                out[todo[ok]] = y[ok]
                todo = todo[~ok]
        else:
            out[sel] = p1[i] * rng.random(n) ** (-1.0 / p2[i])
    return out


def first_passage(rng, d, m) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    out = np.zeros(d.shape)
    pos = d > 0
    dp = d[pos]
    if m > 0:
        out[pos] = rng.wald(dp / m, dp * dp)
    elif m == 0:
        z = rng.standard_normal(dp.size)
        out[pos] = dp * dp / (z * z)
    else:
        fin = rng.random(dp.size) < np.exp(2 * m * dp)
        vals = np.full(dp.size, np.inf)
        if fin.any():
            vals[fin] = rng.wald(dp[fin] / -m, dp[fin] ** 2)
        out[pos] = vals
    return out


def endpoint_below(rng, d, m, seg) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    seg = np.asarray(seg, dtype=float)
    out = np.empty(d.shape)
    todo = np.arange(d.size)
    while todo.size:
        dd, ss = d[todo], seg[todo]
        y = m * ss + np.sqrt(ss) * rng.standard_normal(todo.size)
        u = rng.random(todo.size)
        ok = (y < dd) & (u >= np.exp(-2 * dd * (dd - np.minimum(y, dd)) / ss))
        out[todo[ok]] = y[ok]
        todo = todo[~ok]
    return out


def passage_kernel(rng, n, x, m, horizon, kill, rate, cumw, kind, p1, p2, bound, off, deg,
                   coefs, status, t_out, k_out, l_out, pos_out):
    status[:] = HIT
    t_out[:] = 0.0
    k_out[:] = 0.0
    l_out[:] = 0.0
    pos_out[:] = 0.0
    if x <= 0:
        return
    X = np.zeros(n)
    t = np.zeros(n)
    act = np.arange(n)
    table = (cumw, kind, p1, p2, bound, off, deg, coefs)
    while act.size:
        na = act.size
        tau = rng.standard_exponential(na) / rate if rate > 0 else np.full(na, np.inf)
        rem = horizon - t[act]
        seg = np.minimum(tau, rem)
        d = x - X[act]
        s = first_passage(rng, d, m)
        hit = s <= seg
        t_out[act[hit]] = t[act[hit]] + s[hit]
        pos_out[act[hit]] = x
        keep = ~hit
        act, tau, rem, seg, d = act[keep], tau[keep], rem[keep], seg[keep], d[keep]
        X[act] += endpoint_below(rng, d, m, seg)
        t[act] += seg
        cens = tau >= rem
        status[act[cens]] = CENSORED
        t_out[act[cens]] = t[act[cens]]
        pos_out[act[cens]] = X[act[cens]]
        act = act[~cens]
        low = X[act] < -kill
        status[act[low]] = KILLED
        t_out[act[low]] = t[act[low]]
        pos_out[act[low]] = X[act[low]]
        act = act[~low]
        if not act.size:
            break
        J = draw_jumps(rng, act.size, *table)
        Xpre = X[act].copy()
        X[act] = Xpre + J
        over = X[act] > x
        idx = act[over]
        t_out[idx] = t[idx]
        k_out[idx] = X[idx] - x
        l_out[idx] = x - Xpre[over]
        pos_out[idx] = X[idx]
        act = act[~over]
        low = X[act] < -kill
        status[act[low]] = KILLED
        t_out[act[low]] = t[act[low]]
        pos_out[act[low]] = X[act[low]]
        act = act[~low]


def sup_kernel(rng, n, top, m, horizon, kill, rate, cumw, kind, p1, p2, bound, off, deg,
               coefs, sup_out, status):
    status[:] = CENSORED
    X = np.zeros(n)
    t = np.zeros(n)
    M = np.zeros(n)
    act = np.arange(n)
    table = (cumw, kind, p1, p2, bound, off, deg, coefs)
    while act.size:
        na = act.size
        tau = rng.standard_exponential(na) / rate if rate > 0 else np.full(na, np.inf)
        rem = horizon - t[act]
        seg = np.minimum(tau, rem)
        y = m * seg + np.sqrt(seg) * rng.standard_normal(na)
        mx = X[act] + 0.5 * (y + np.sqrt(y * y - 2 * seg * np.log1p(-rng.random(na))))
        M[act] = np.maximum(M[act], mx)
        X[act] += y
        t[act] += seg
        over = M[act] > top
        status[act[over]] = HIT
        keep = ~over & (tau < rem)
        act = act[keep]
        low = X[act] < -kill
        status[act[low]] = KILLED
        act = act[~low]
        if not act.size:
            break
        X[act] += draw_jumps(rng, act.size, *table)
        M[act] = np.maximum(M[act], X[act])
        over = M[act] > top
        status[act[over]] = HIT
        act = act[~over]
        low = X[act] < -kill
        status[act[low]] = KILLED
        act = act[~low]
    sup_out[:] = M


def coupled_kernel_py(*args):
    """Pure-Python run of the scalar coupled loop (same stream as numba)."""
    return coupled_kernel.py_func(*args)
