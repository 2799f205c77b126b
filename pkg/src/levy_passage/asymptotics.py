"""Residue constants and the exponential expansion of F.

    F(θ, μ, ρ, x) = C₀ e^{-γ₀ x} + Σ_i a_i (C_i(x) e^{-γ_i x} + conj) + O(e^{-Bx}),

with a_i = 1/2 for real γ_i and 1 otherwise, and C_i(x) a polynomial of
degree n_i − 1 built from the Laurent coefficients of F̂ at −γ_i.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContourContamination, MultiplicityMismatch, NeedsFGrid, WrongRegime
from .measures import GammaMixture, MeasureSum
from .model import ProcessSpec, eval_phi_derivative, phi_second_at_zero
from .transform import FGrid, _context, _fhat, apply_R_derivative_at_zero, numerator
from .zeros import (
    ZeroReport,
    companion_zeros,
    find_real_zeros,
    find_strip_zeros,
    is_zero_mean,
    multiplicity_at,
)


@dataclass(frozen=True)
class ExpansionTerm:
    gamma: complex
    a: float
    coeffs: tuple[complex, ...]  # K_{n}, ..., K_{1}
    halfwidth: float = 0.0

    @property
    def multiplicity(self) -> int:
        return len(self.coeffs)

    def poly(self, x) -> np.ndarray:
        """C_i(x) = Σ_j K_j x^{j-1}/(j-1)!."""
        x = np.asarray(x, dtype=float)
        n = len(self.coeffs)
        out = np.zeros(x.shape, dtype=complex)
        for j in range(1, n + 1):
            K = self.coeffs[n - j]
            out = out + K * x ** (j - 1) / math.factorial(j - 1)
        return out


@dataclass(frozen=True)
class ExpansionReport:
    theta: float
    mu: float
    rho: float
    gamma0: float
    C0: float
    terms: tuple[ExpansionTerm, ...]
    B: float
    C0_halfwidth: float = 0.0
    zeros: ZeroReport | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "mu": self.mu,
            "rho": self.rho,
            "leading": {"gamma0": self.gamma0, "C0": self.C0, "halfwidth": self.C0_halfwidth},
            "terms": [
                {
                    "gamma": [t.gamma.real, t.gamma.imag],
                    "a": t.a,
                    "coeffs": [[c.real, c.imag] for c in t.coeffs],
                    "halfwidth": t.halfwidth,
                }
                for t in self.terms
            ],
            "B": self.B,
        }


def eval_expansion(report: ExpansionReport, x, n_terms: int | None = None) -> np.ndarray:
    """Real value of the truncated expansion at ``x``; ``n_terms`` limits the sum."""
    xa = np.asarray(x, dtype=float)
    out = report.C0 * np.exp(-report.gamma0 * xa)
    terms = report.terms if n_terms is None else report.terms[:n_terms]
    for t in terms:
        v = t.poly(xa) * np.exp(-t.gamma * xa)
        out = out + t.a * 2 * v.real  # C e^{-γx} + conj
    return out


# ---------------------------------------------------------------------------


def doney_constant(spec: ProcessSpec) -> float:
    """−φ'(0)/φ'(−γ₀(0)), the leading constant without negative jumps."""
    g0 = find_real_zeros(spec, 0.0)[0]
    return float((-eval_phi_derivative(spec, 0.0) / eval_phi_derivative(spec, -g0)).real)


def residue_simple(
    spec: ProcessSpec,
    theta: float,
    mu: float,
    rho: float,
    zero: complex,
    grid: FGrid | None = None,
) -> complex:
    """Residue of F̂ at a simple zero ``zero`` of φ_θ: N(zero)/φ'(zero).

    Raises
    ------
    MultiplicityMismatch
        ``zero`` is not a simple zero.
    """
    zero = complex(zero)
    k = multiplicity_at(spec, theta, zero)
    if k != 1:
        raise MultiplicityMismatch(f"zero at {zero} has multiplicity {k}")
    ctx = _context(spec, theta, mu, rho, grid)
    N = complex(numerator(ctx, zero)[0])
    return N / complex(eval_phi_derivative(spec, zero, 1))


def residue_zero_mean(
    spec: ProcessSpec, mu: float = 0.0, rho: float = 0.0, grid: FGrid | None = None
) -> float:
    """C₀(0, μ, ρ) when E(X₁) = 0 and 0 is a double zero of φ.

    ``(1 + 2 ∫ y² e^{-ρy} g((ρ−μ)y) ν₊(dy) − 2 ∫ν₋ ∫(y+b) F db) / φ''(0)``
    with g(z) = (e^z − 1 − z)/z².
    """
    if not is_zero_mean(spec):
        raise WrongRegime("residue_zero_mean needs E(X_1) = 0")
    if not spec.spectrally_positive and grid is None:
        raise NeedsFGrid("two-sided spec: supply an FGrid for the R operator")
    jump = complex(spec.measure.pos_divdiff(rho, mu, order=1)[0]).real
    rf1 = apply_R_derivative_at_zero(spec, grid)
    return float((1 + 2 * jump + 2 * rf1) / phi_second_at_zero(spec))


def laurent_coeffs(func, z0: complex, n: int, radius: float, m: int = 256) -> list[complex]:
    """Principal-part coefficients K_n..K_1 of ``func`` at ``z0`` by a circle rule.

    K_j = (1/2πi) ∮ func(z) (z − z₀)^{j−1} dz, trapezoid rule on ``m`` nodes.
    """
    ang = 2 * np.pi * np.arange(m) / m
    u = radius * np.exp(1j * ang)
    f = np.asarray(func(z0 + u), dtype=complex)
    coeffs = []
    for j in range(n, 0, -1):
        coeffs.append(complex(np.mean(f * u**j)))
    return coeffs


def higher_residue_coeffs(
    spec: ProcessSpec,
    theta: float,
    mu: float,
    rho: float,
    zero: complex,
    n: int,
    grid: FGrid | None = None,
    others=(),
    radius: float | None = None,
) -> tuple[complex, ...]:
    """Laurent coefficients (K_n, ..., K_1) of F̂ at a zero of order ``n``.

    Raises
    ------
    ContourContamination
        Another singularity lies inside the circle.
    """
    zero = complex(zero)
    dists = [abs(complex(o) - zero) for o in others if abs(complex(o) - zero) > 1e-9]
    if radius is None:
        radius = min([1e-2] + [0.5 * d for d in dists])
    if any(d <= radius for d in dists):
        raise ContourContamination(f"another singularity inside radius {radius} around {zero}")
    ctx = _context(spec, theta, mu, rho, grid)
    return tuple(laurent_coeffs(lambda z: _fhat(ctx, z), zero, n, radius))


# ---------------------------------------------------------------------------


def _gamma_only(spec: ProcessSpec) -> bool:
    m = spec.measure
    parts = m.parts if isinstance(m, MeasureSum) else (m,)
    return all(isinstance(p, GammaMixture) for p in parts)


def default_B(spec: ProcessSpec, theta: float = 0.0, rho: float = 0.0) -> float:
    """Strip width: beyond the last zero for gamma mixtures, else max(4, 4γ₀)."""
    g0 = find_real_zeros(spec, theta)[0]
    B_nu = spec.meromorphic.B_nu
    if _gamma_only(spec):
        roots = companion_zeros(spec, theta, B=1e6)
        B = max([0.0] + [-r.real for r in roots]) + 1.0
        if rho > 0:
            # the numerator picks up poles at −β − ρ
            B = min(B, min(-p.real for p, _ in spec.meromorphic.poles) + 0.9 * rho)
    else:
        B = max(4.0, 4.0 * g0)
    if math.isfinite(B_nu):
        B = min(B, 0.9 * B_nu)
    return float(B)


def _lipschitz_R(spec: ProcessSpec, q: complex) -> float:
    """∫_{y<0} ν(dy) ∫_0^{-y} |e^{-q(b+y)} − 1| db."""
    ys, ws = spec.measure.negative_nodes(abs(q))
    tot = 0.0
    for y, w in zip(ys, ws):
        b = np.linspace(0.0, -y, 401)
        tot += w * np.trapezoid(np.abs(np.exp(-q * (b + y)) - 1), b)
    return float(tot)


def expand_F(
    spec: ProcessSpec,
    theta: float = 0.0,
    mu: float = 0.0,
    rho: float = 0.0,
    B: float | None = None,
    grid: FGrid | None = None,
) -> ExpansionReport:
    """Assemble the exponential expansion in the strip −B < Re q."""
    if B is None:
        B = default_B(spec, theta, rho)
    zr = find_strip_zeros(spec, theta, B)
    g0 = zr.gamma0
    resid = grid.residual if grid is not None else 0.0
    others = [z for z, _ in zr.zeros] + [p for p, _ in spec.meromorphic.poles]
    if theta == 0 and zr.gamma0_multiplicity == 2:
        C0 = residue_zero_mean(spec, mu, rho, grid)
        hw0 = 0.0
    else:
        C0 = residue_simple(spec, theta, mu, rho, -g0, grid).real
        hw0 = resid * (_lipschitz_R(spec, -g0) + _lipschitz_R(spec, zr.gamma0_star)) / abs(
            complex(eval_phi_derivative(spec, -g0))
        ) if resid else 0.0
    terms = []
    for gam, n in zr.pairs:
        z = -gam
        if n == 1:
            coeffs = (residue_simple(spec, theta, mu, rho, z, grid),)
        else:
            coeffs = higher_residue_coeffs(spec, theta, mu, rho, z, n, grid, others)
        hw = 0.0
        if resid:
            hw = resid * (_lipschitz_R(spec, z) + _lipschitz_R(spec, zr.gamma0_star)) / abs(
                complex(eval_phi_derivative(spec, z))
            )
        a = 0.5 if gam.imag == 0 else 1.0
        terms.append(ExpansionTerm(complex(gam), a, tuple(complex(c) for c in coeffs), hw))
    return ExpansionReport(
        theta=float(theta),
        mu=float(mu),
        rho=float(rho),
        gamma0=float(g0),
        C0=float(C0),
        terms=tuple(terms),
        B=float(B),
        C0_halfwidth=float(hw0),
        zeros=zr,
    )


def uniformity_probe(spec: ProcessSpec, thetas, x: float = 20.0, grid=None) -> dict:
    """Remainder |F_bromwich − expansion| at ``x`` across a θ-grid.

    Heuristic only: the O-constant is not available in closed form.
    """
    from .transform import invert_bromwich_full

    rows = []
    for th in thetas:
        rep = expand_F(spec, float(th), grid=grid)
        brom = invert_bromwich_full(spec, float(th), 0.0, 0.0, x, grid=grid).raw
        rows.append({"theta": float(th), "remainder": abs(brom - float(eval_expansion(rep, x)))})
    base = rows[0]["remainder"]
    worst = max(r["remainder"] for r in rows)
    floor = 1e-12
    return {
        "rows": rows,
        "max_remainder": worst,
        "ratio": worst / max(base, floor),
        "bounded": worst <= 10 * max(base, floor),
    }
