"""Small numerically stable complex helpers used across modules."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


def exprel(z):
    """Return ``(exp(z) - 1) / z`` with the removable point at zero.

    Works for complex arrays; uses a short Taylor series near the origin.
    """
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    small = np.abs(z) < 1e-3
    zs = z[small]
    out[small] = 1 + zs / 2 * (1 + zs / 3 * (1 + zs / 4 * (1 + zs / 5)))
    zb = z[~small]
    out[~small] = np.expm1(zb) / zb
    return out


def exprel2(z):
    """Return ``(exp(z) * (z - 1) + 1) / z**2``, equal to ``int_0^1 u e^{zu} du``."""
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    small = np.abs(z) < 1e-2
    zs = z[small]
    # sum_n z^n (n+1)/(n+2)!
    acc = np.zeros_like(zs)
    for n in range(7, -1, -1):
        coef = (n + 1) / _factorial(n + 2)
        acc = acc * zs + coef
    out[small] = acc
    zb = z[~small]
    out[~small] = (np.exp(zb) * (zb - 1) + 1) / zb**2
    return out


@lru_cache(maxsize=None)
def _factorial(n: int) -> float:
    return float(np.prod(np.arange(1, n + 1, dtype=float))) if n > 1 else 1.0


@lru_cache(maxsize=64)
def gauss_legendre(n: int):
    """Cached Gauss-Legendre nodes and weights on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gl_nodes(a: float, b: float, n: int):
    """Gauss-Legendre nodes and weights mapped to [a, b]."""
    x, w = gauss_legendre(n)
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * x, half * w
