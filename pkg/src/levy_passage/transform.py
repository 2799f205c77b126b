"""Laplace transform of F(θ, μ, ρ, ·) and its numerical inversion.

The transform satisfies

    F̂(q) = N(q) / (φ(q) − θ),
    N(q) = (q − γ₀*)/2 + Ψ(q) − Ψ(γ₀*) + RF(q) − RF(γ₀*),

with Ψ(q) = ∫_{(0,∞)} (e^{-(q+ρ)y} − e^{-μy}) / (q+ρ−μ) ν(dy) and R the
operator acting on F through the negative jumps. Inversion runs along the
vertical line Re q = q₁ after extending F by ``1 + x`` on [-1, 0], which
makes the integrand decay like 1/t².
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import integrate, special

from ._special import exprel, exprel2, gl_nodes
from .errors import GridTooCoarse, NeedsFGrid, NoConvergence, SlowDecay, ZeroDivision
from .model import ProcessSpec, eval_phi
from .zeros import beta_theta, find_real_zeros


@dataclass(frozen=True)
class FGrid:
    """F(θ, μ, ρ, ·) tabulated on the uniform grid ``x_j = j h``."""

    x: np.ndarray
    F: np.ndarray
    theta: float = 0.0
    mu: float = 0.0
    rho: float = 0.0
    iterations: int = 0
    residual: float = 0.0

    @property
    def h(self) -> float:
        return float(self.x[1] - self.x[0])

    @classmethod
    def uniform(cls, x_max: float, h: float, values, **kw) -> "FGrid":
        n = int(round(x_max / h))
        x = np.arange(n + 1) * h
        F = np.broadcast_to(np.asarray(values, dtype=float), x.shape).copy()
        return cls(x, F, **kw)

    def __call__(self, x) -> np.ndarray:
        return np.interp(x, self.x, self.F)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("x,F\n")
            for xi, fi in zip(self.x, self.F):
                fh.write(f"{xi:.12g},{fi:.17g}\n")

    @classmethod
    def from_csv(cls, path: str | Path) -> "FGrid":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1])


# ---------------------------------------------------------------------------
# R operator


def _prefix_integrals(q: np.ndarray, grid: FGrid, s: np.ndarray):
    """∫_0^s e^{-qb} F(b) db and ∫_0^s F(b) db for the linear interpolant.

    Returns arrays of shape (len(q), len(s)).
    """
    h = grid.h
    F = grid.F
    dF = np.diff(F)
    b = grid.x[:-1]
    nseg = F.size - 1
    q = q[:, None]
    seg = np.exp(-q * b) * h * (F[:-1] * exprel(-q * h) + dF * exprel2(-q * h))
    cum = np.concatenate([np.zeros((q.shape[0], 1), complex), np.cumsum(seg, axis=1)], axis=1)
    seg0 = h * (F[:-1] + 0.5 * dF)
    cum0 = np.concatenate([[0.0], np.cumsum(seg0)])
    j = np.minimum((s / h).astype(int), nseg - 1)
    j = np.maximum(j, 0)
    w = s - grid.x[j]
    slope = dF[j] / h
    pa = np.exp(-q * grid.x[j]) * w * (F[j] * exprel(-q * w) + slope * w * exprel2(-q * w))
    A = cum[:, j] + pa
    A0 = cum0[j] + w * (F[j] + 0.5 * slope * w)
    return A, A0


def apply_R(spec: ProcessSpec, grid: FGrid | None, q) -> np.ndarray:
    """Rh(q) = ∫_{y<0} ν(dy) ∫_0^{-y} (e^{-q(b+y)} − 1) h(b) db for h on ``grid``.

    Raises
    ------
    GridTooCoarse
        When the step exceeds k_cut/64.
    NeedsFGrid
        Two-sided measure without a grid.
    """
    qa = np.atleast_1d(np.asarray(q, dtype=complex))
    m = spec.measure
    if m.spectrally_positive:
        out = np.zeros(qa.shape, dtype=complex)
        return out[0] if np.ndim(q) == 0 else out
    if grid is None:
        raise NeedsFGrid("two-sided spec: supply an FGrid for the R operator")
    k_cut = -m.neg_support_lower()
    if grid.h > k_cut / 64 * (1 + 1e-12):
        raise GridTooCoarse(f"grid step {grid.h} > k_cut/64 = {k_cut / 64}")
    if grid.x[-1] < k_cut - 1e-12:
        raise GridTooCoarse(f"grid ends at {grid.x[-1]} before k_cut = {k_cut}")
    ys, ws = m.negative_nodes(float(np.max(np.abs(qa))))
    s = -ys
    out = np.zeros(qa.shape, dtype=complex)
    flat = qa.ravel()
    for lo in range(0, flat.size, 2048):
        qq = flat[lo:lo + 2048]
        A, A0 = _prefix_integrals(qq, grid, s)
        J = np.exp(qq[:, None] * s) * A - A0
        out.ravel()[lo:lo + 2048] = J @ ws
    return out[0] if np.ndim(q) == 0 else out


def apply_R_derivative_at_zero(spec: ProcessSpec, grid: FGrid | None) -> float:
    """d/dq RF at q = 0, equal to −∫_{y<0} ν(dy) ∫_0^{-y} (b + y) F(b) db."""
    m = spec.measure
    if m.spectrally_positive:
        return 0.0
    if grid is None:
        raise NeedsFGrid("two-sided spec: supply an FGrid for the R operator")
    ys, ws = m.negative_nodes(0.0)
    tot = 0.0
    for y, w in zip(ys, ws):
        b = np.linspace(0.0, -y, 2001)
        tot += w * integrate.trapezoid((b + y) * grid(b), b)
    return -float(tot)


# ---------------------------------------------------------------------------
# transform


@dataclass(frozen=True)
class _Ctx:
    spec: ProcessSpec
    theta: float
    mu: float
    rho: float
    gstar: float
    grid: FGrid | None
    psi_star: complex
    rf_star: complex


def _context(spec, theta, mu, rho, grid) -> _Ctx:
    if not spec.spectrally_positive and grid is None:
        raise NeedsFGrid("two-sided spec: supply an FGrid for the R operator")
    gstar = find_real_zeros(spec, theta)[1]
    psi_star = complex(spec.measure.pos_divdiff(gstar + rho, mu)[0])
    rf_star = complex(apply_R(spec, grid, complex(gstar)))
    return _Ctx(spec, theta, mu, rho, gstar, grid, psi_star, rf_star)


def numerator(ctx: _Ctx, q) -> np.ndarray:
    """N(q), the bracket of the functional equation."""
    q = np.atleast_1d(np.asarray(q, dtype=complex))
    psi = ctx.spec.measure.pos_divdiff(q + ctx.rho, ctx.mu)
    rf = apply_R(ctx.spec, ctx.grid, q) if ctx.grid is not None else 0.0
    return (q - ctx.gstar) / 2 + psi - ctx.psi_star + rf - ctx.rf_star


def _fhat(ctx: _Ctx, q) -> np.ndarray:
    q = np.atleast_1d(np.asarray(q, dtype=complex))
    den = eval_phi(ctx.spec, q) - ctx.theta
    if np.any(den == 0):
        raise ZeroDivision("transform evaluated at a zero of phi - theta")
    return numerator(ctx, q) / den


def eval_Fhat(spec: ProcessSpec, theta: float, mu: float, rho: float, q, grid: FGrid | None = None):
    """F̂(θ, μ, ρ, q) from the functional equation (scalar or array ``q``)."""
    ctx = _context(spec, theta, mu, rho, grid)
    out = _fhat(ctx, q)
    return out[0] if np.ndim(q) == 0 else out.reshape(np.shape(q))


# ---------------------------------------------------------------------------
# inversion


@dataclass(frozen=True)
class BromwichResult:
    value: float
    raw: float
    abserr: float
    imag_residual: float
    q1: float


def default_q1(spec: ProcessSpec, theta: float) -> float:
    """q₁ = β_θ/2, half-way between the removable point and the imaginary axis."""
    return 0.5 * beta_theta(spec, find_real_zeros(spec, theta)[1])


def _h_parts(ctx: _Ctx, q1: float):
    def H(t):
        q = q1 + 1j * np.atleast_1d(np.asarray(t, dtype=float))
        return _fhat(ctx, q) - (1 + q) / q**2

    return H


def invert_bromwich_full(
    spec: ProcessSpec,
    theta: float,
    mu: float,
    rho: float,
    x: float,
    q1: float | None = None,
    grid: FGrid | None = None,
    *,
    epsabs: float = 1e-11,
) -> BromwichResult:
    """Bromwich inversion at a single ``x`` with diagnostics.

    ``F(x) = (x+1) + (e^{q₁x}/π) ∫_0^∞ Re[e^{itx} H(q₁+it)] dt`` where
    H = F̂ − (1+q)/q²; the ramp ``(x+1)`` is the exact inverse of e^q/q² and
    the tilde part (e^q − 1 − q)/q² then reduces to the subtraction.
    """
    ctx = _context(spec, theta, mu, rho, grid)
    if q1 is None:
        q1 = default_q1(spec, theta)
    H = _h_parts(ctx, q1)
    re = lambda t: float(H(t)[0].real)  # noqa: E731
    im = lambda t: float(H(t)[0].imag)  # noqa: E731
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            if x == 0:
                v, e = integrate.quad(re, 0, np.inf, epsabs=epsabs, epsrel=1e-12, limit=2000)
                val_int, err = v, e
            else:
                # split off [0, t0] where H varies fastest, QAWF beyond
                t0 = 20.0
                a1, e1 = _quad_osc(re, im, x, 0.0, t0, epsabs)
                c, ec = integrate.quad(re, t0, np.inf, weight="cos", wvar=x,
                                       epsabs=epsabs, limlst=200, limit=2000)
                s, es = integrate.quad(im, t0, np.inf, weight="sin", wvar=x,
                                       epsabs=epsabs, limlst=200, limit=2000)
                val_int, err = a1 + c - s, e1 + ec + es
        except integrate.IntegrationWarning as exc:
            raise SlowDecay(f"Bromwich integrand tail did not converge: {exc}") from exc
    scale = math.exp(q1 * x) / math.pi
    raw = (x + 1) + scale * val_int
    tt = np.array([0.3, 3.0, 30.0])
    sym = np.max(np.abs(_fhat(ctx, q1 - 1j * tt) - np.conj(_fhat(ctx, q1 + 1j * tt))))
    return BromwichResult(
        value=float(min(1.0, max(0.0, raw))),
        raw=float(raw),
        abserr=float(scale * err),
        imag_residual=float(scale * sym),
        q1=float(q1),
    )


def _quad_osc(re, im, x, a, b, epsabs):
    c, ec = integrate.quad(re, a, b, weight="cos", wvar=x, epsabs=epsabs, limit=2000)
    s, es = integrate.quad(im, a, b, weight="sin", wvar=x, epsabs=epsabs, limit=2000)
    return c - s, ec + es


def invert_bromwich(spec, theta, mu, rho, x, q1=None, grid=None) -> float:
    """F(θ, μ, ρ, x) by Bromwich inversion, clamped to [0, 1] for x >= 0.

    For x in (-1, 0) the unclamped value reproduces the extension 1 + x.
    """
    res = invert_bromwich_full(spec, theta, mu, rho, x, q1, grid)
    return res.value if x >= 0 else res.raw


# ---------------------------------------------------------------------------
# vectorised panel inversion on a grid


def _panel_nodes(T: float, width: float, order: int = 8):
    n = max(1, int(math.ceil(T / width)))
    edges = np.linspace(0.0, T, n + 1)
    xg, wg = gl_nodes(-1.0, 1.0, order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    t = (mid[:, None] + half[:, None] * xg).ravel()
    w = (half[:, None] * wg).ravel()
    return t, w


def _tail_q2(x: np.ndarray, q1: float, T: float) -> np.ndarray:
    """∫_T^∞ e^{(q₁+it)x} / (q₁+it)² dt in closed form through E₁."""
    qT = q1 + 1j * T
    out = np.empty(x.shape, dtype=complex)
    zero = x == 0
    out[zero] = 1 / (1j * qT)
    xs = x[~zero]
    s = -qT * xs
    e2 = np.exp(-s) - s * special.exp1(s)
    out[~zero] = (xs / (-1j)) * e2 / s
    return out


def invert_on_grid(
    spec: ProcessSpec,
    theta: float,
    mu: float,
    rho: float,
    x,
    q1: float | None = None,
    grid: FGrid | None = None,
    *,
    T: float = 4000.0,
) -> np.ndarray:
    """Bromwich inversion at many ``x`` at once.

    Gauss-Legendre panels of width π/(4 x_max + 1) up to ``T``; the tail
    beyond ``T`` uses the leading 1/q² behaviour of H, integrated exactly.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    ctx = _context(spec, theta, mu, rho, grid)
    if q1 is None:
        q1 = default_q1(spec, theta)
    width = math.pi / (4 * float(np.max(np.abs(x))) + 1)
    width = min(width, 0.25)
    t, w = _panel_nodes(T, width)
    q = q1 + 1j * t
    Hv = np.empty(q.shape, dtype=complex)
    for lo in range(0, q.size, 8192):
        qq = q[lo:lo + 8192]
        Hv[lo:lo + 8192] = _fhat(ctx, qq) - (1 + qq) / qq**2
    qT = q1 + 1j * T
    HT = _fhat(ctx, np.array([qT]))[0] - (1 + qT) / qT**2
    h2 = HT * qT**2
    out = np.empty(x.shape)
    wH = w * Hv
    for lo in range(0, x.size, 64):
        xx = x[lo:lo + 64]
        body = np.exp(1j * np.outer(xx, t)) @ wH
        tail = h2 * _tail_q2(xx, q1, T) * np.exp(-q1 * xx)
        val = np.exp(q1 * xx) / math.pi * (body + tail).real
        out[lo:lo + 64] = xx + 1 + val
    return out


def solve_F_grid(
    spec: ProcessSpec,
    theta: float,
    mu: float,
    rho: float,
    x_max: float,
    h: float,
    q1: float | None = None,
    *,
    initial=None,
    tol: float = 1e-4,
    max_iter: int = 50,
    T: float = 4000.0,
) -> FGrid:
    """Fixed-point closure of the functional equation when R ≠ 0.

    The grid is refreshed by inverting the transform built from its own
    R-term until the sup-change drops below ``tol``.

    Raises
    ------
    NoConvergence
        After ``max_iter`` sweeps.
    """
    n = int(round(x_max / h))
    x = np.arange(n + 1) * h
    kw = dict(theta=theta, mu=mu, rho=rho)
    if spec.spectrally_positive:
        F = np.clip(invert_on_grid(spec, theta, mu, rho, x, q1, None, T=T), 0, 1)
        return FGrid(x, F, iterations=1, residual=0.0, **kw)
    if initial is None:
        initial = _initial_guess(spec, theta, mu, rho, x)
    grid = FGrid(x, np.clip(np.asarray(initial, dtype=float), 0, 1), **kw)
    for it in range(1, max_iter + 1):
        F = np.clip(invert_on_grid(spec, theta, mu, rho, x, q1, grid, T=T), 0, 1)
        change = float(np.max(np.abs(F - grid.F)))
        grid = FGrid(x, F, iterations=it, residual=change, **kw)
        if change < tol:
            return grid
    raise NoConvergence(f"F-grid fixed point not reached after {max_iter} iterations")


def _initial_guess(spec, theta, mu, rho, x):
    """Coarse starting grid: a supremum Monte Carlo run when θ = μ = ρ = 0."""
    if theta == 0 and mu == 0 and rho == 0:
        from .mc.engine import estimate_sup_tail

        return estimate_sup_tail(spec, x, n_paths=4000, seed=2024).p
    g0 = find_real_zeros(spec, theta)[0]
    return np.exp(-g0 * x)
