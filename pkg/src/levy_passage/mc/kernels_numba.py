"""Scalar event-driven kernels, compiled with numba when available.

Between jump epochs the path is a Brownian motion with drift ``m``. Its
first passage over the remaining distance is drawn exactly (inverse
Gaussian, or a Lévy law when ``m = 0``); when no passage occurs before the
next epoch the endpoint is drawn conditionally on the running maximum
staying below the level. No time discretisation is involved.

Status codes: 0 hit, 1 censored at the horizon, 2 killed below ``-kill``.
``pos_out`` holds the position where each path stopped.
"""

from __future__ import annotations

import math

import numpy as np

from .backend import njit

HIT, CENSORED, KILLED = 0, 1, 2


@njit(cache=True, nogil=True)
def draw_jump(rng, cumw, kind, p1, p2, bound, off, deg, coefs):
    u = rng.random()
    i = 0
    last = cumw.shape[0] - 1
    while i < last and u > cumw[i]:
        i += 1
    kd = kind[i]
    if kd == 0:
        return p1[i]
    if kd == 1:
        return rng.standard_gamma(p1[i]) * p2[i]
    if kd == 2:
        a = p1[i]
        b = p2[i]
        while True:
            y = a + (b - a) * rng.random()
            v = 0.0
            for j in range(deg[i] - 1, -1, -1):
                v = v * y + coefs[off[i] + j]
            if rng.random() * bound[i] <= v:
                return y
    return p1[i] * rng.random() ** (-1.0 / p2[i])


@njit(cache=True, nogil=True)
def first_passage(rng, d, m):
    """Time for B_t + m t to exceed ``d >= 0`` (inf when it never does)."""
    if d <= 0.0:
        return 0.0
    if m > 0.0:
        return rng.wald(d / m, d * d)
    if m == 0.0:
        z = rng.standard_normal()
        return d * d / (z * z)
    if rng.random() < math.exp(2.0 * m * d):
        return rng.wald(d / -m, d * d)
    return math.inf


@njit(cache=True, nogil=True)
def endpoint_below(rng, d, m, seg):
    """B_seg + m seg conditioned on the running maximum staying below ``d``."""
    sd = math.sqrt(seg)
    while True:
        y = m * seg + sd * rng.standard_normal()
        if y < d:
            if rng.random() >= math.exp(-2.0 * d * (d - y) / seg):
                return y


@njit(cache=True, nogil=True)
def bridge_max(rng, y, seg):
    """Maximum of a Brownian bridge from 0 to ``y`` over a segment of length ``seg``."""
    return 0.5 * (y + math.sqrt(y * y - 2.0 * seg * math.log(1.0 - rng.random())))


@njit(cache=True, nogil=True)
def passage_kernel(rng, n, x, m, horizon, kill, rate, cumw, kind, p1, p2, bound, off, deg,
                   coefs, status, t_out, k_out, l_out, pos_out):
    for p in range(n):
        X = 0.0
        t = 0.0
        status[p] = HIT
        t_out[p] = 0.0
        k_out[p] = 0.0
        l_out[p] = 0.0
        pos_out[p] = 0.0
        if x <= 0.0:
            continue
        while True:
            tau = rng.standard_exponential() / rate if rate > 0.0 else math.inf
            rem = horizon - t
            seg = tau if tau < rem else rem
            d = x - X
            s = first_passage(rng, d, m)
            if s <= seg:
                t_out[p] = t + s
                pos_out[p] = x
                break
            X += endpoint_below(rng, d, m, seg)
            t += seg
            if tau >= rem:
                status[p] = CENSORED
                t_out[p] = t
                pos_out[p] = X
                break
            if X < -kill:
                status[p] = KILLED
                t_out[p] = t
                pos_out[p] = X
                break
            J = draw_jump(rng, cumw, kind, p1, p2, bound, off, deg, coefs)
            Xpre = X
            X += J
            if X > x:
                pos_out[p] = X
                t_out[p] = t
                k_out[p] = X - x
                l_out[p] = x - Xpre
                break
            if X < -kill:
                status[p] = KILLED
                t_out[p] = t
                pos_out[p] = X
                break


@njit(cache=True, nogil=True)
def sup_kernel(rng, n, top, m, horizon, kill, rate, cumw, kind, p1, p2, bound, off, deg,
               coefs, sup_out, status):
    """Running supremum over [0, horizon], stopped once it exceeds ``top``."""
    for p in range(n):
        X = 0.0
        t = 0.0
        M = 0.0
        status[p] = CENSORED
        while True:
            tau = rng.standard_exponential() / rate if rate > 0.0 else math.inf
            rem = horizon - t
            seg = tau if tau < rem else rem
            y = m * seg + math.sqrt(seg) * rng.standard_normal()
            mx = X + bridge_max(rng, y, seg)
            if mx > M:
                M = mx
            X += y
            t += seg
            if M > top:
                status[p] = HIT
                break
            if tau >= rem:
                break
            if X < -kill:
                status[p] = KILLED
                break
            X += draw_jump(rng, cumw, kind, p1, p2, bound, off, deg, coefs)
            if X > M:
                M = X
            if M > top:
                status[p] = HIT
                break
            if X < -kill:
                status[p] = KILLED
                break
        sup_out[p] = M


@njit(cache=True, nogil=True)
def coupled_kernel(rng, n, x, m, horizon, kill, ktrunc, rate, cumw, kind, p1, p2, bound,
                   off, deg, coefs, status, t_out, tk_out, statk):
    """Full and truncated processes sharing Brownian path and jump epochs.

    The truncated process drops every jump below ``-ktrunc``; its level gap
    ``S`` to the full process only grows at those epochs, so X^k = X + S.
    """
    for p in range(n):
        X = 0.0
        S = 0.0
        t = 0.0
        hitk = False
        status[p] = HIT
        statk[p] = HIT
        t_out[p] = 0.0
        tk_out[p] = 0.0
        if x <= 0.0:
            continue
        while True:
            tau = rng.standard_exponential() / rate if rate > 0.0 else math.inf
            rem = horizon - t
            seg = tau if tau < rem else rem
            done = False
            if not hitk:
                dk = x - X - S
                s = first_passage(rng, dk, m)
                if s <= seg:
                    hitk = True
                    tk_out[p] = t + s
                    # the full path sits at X + dk and continues alone
                    X += dk
                    t2 = t + s
                    seg2 = seg - s
                    s2 = first_passage(rng, S, m)
                    if s2 <= seg2:
                        t_out[p] = t2 + s2
                        done = True
                    else:
                        X += endpoint_below(rng, S, m, seg2)
                else:
                    X += endpoint_below(rng, dk, m, seg)
            else:
                d = x - X
                s = first_passage(rng, d, m)
                if s <= seg:
                    t_out[p] = t + s
                    done = True
                else:
                    X += endpoint_below(rng, d, m, seg)
            if done:
                break
            t += seg
            if tau >= rem:
                status[p] = CENSORED
                t_out[p] = t
                if not hitk:
                    statk[p] = CENSORED
                    tk_out[p] = t
                break
            if (X < -kill) if hitk else (X + S < -kill):
                status[p] = KILLED
                t_out[p] = t
                if not hitk:
                    statk[p] = KILLED
                    tk_out[p] = t
                break
            J = draw_jump(rng, cumw, kind, p1, p2, bound, off, deg, coefs)
            X += J
            if J < -ktrunc:
                S -= J
            if not hitk and X + S > x:
                hitk = True
                tk_out[p] = t
            if X > x:
                t_out[p] = t
                break
            if hitk and X < -kill:
                status[p] = KILLED
                t_out[p] = t
                break
            if not hitk and X + S < -kill:
                status[p] = KILLED
                statk[p] = KILLED
                t_out[p] = t
                tk_out[p] = t
                break
