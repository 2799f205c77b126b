"""Limit laws of the hitting triplet as the level grows.

Conditionally on a finite hitting time, the normalized time is asymptotically
Gaussian (or, in the zero-mean case, a Brownian hitting-time law ϱ) and
independent of the overshoot/undershoot pair (K, L), whose limit w has an
explicit form for spectrally positive processes:

    w(dk, dl) = norm · [a δ_{(0,0)} + g(l) 1_{k,l ≥ 0} ν(l + dk) dl]

with (norm, a, g) depending on the sign of E(X₁).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, interpolate, stats

from .errors import NoNegativeZero, TwoSidedUnsupported, WrongRegime, ZeroMean
from .measures import Atoms, MeasureSum
from .model import ProcessSpec, eval_phi_derivative, mean_x1, phi_second_at_zero
from .zeros import find_real_zeros, is_zero_mean

# ---------------------------------------------------------------------------
# time component


@dataclass(frozen=True)
class GaussianLimit:
    """(T_x + shift · x)/√x ⇒ N(0, variance) given T_x < ∞.

    ``shift`` is 1/φ'(−γ₀(0)) when E X₁ < 0 and 1/φ'(0) when E X₁ > 0.
    """

    shift: float
    variance: float
    gamma: float
    regime: str

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance)

    def normalize(self, t, x: float) -> np.ndarray:
        return (np.asarray(t, dtype=float) + self.shift * x) / math.sqrt(x)

    def cdf(self, z) -> np.ndarray:
        return stats.norm.cdf(np.asarray(z, dtype=float), scale=self.sd)


def _regime(spec: ProcessSpec) -> str:
    if is_zero_mean(spec):
        return "zero"
    return "negative" if mean_x1(spec) < 0 else "positive"


def gaussian_limit(spec: ProcessSpec) -> GaussianLimit:
    """Gaussian limit of the normalized hitting time.

    Raises
    ------
    ZeroMean
        E(X₁) = 0; use :func:`hitting_law_rho`.
    """
    reg = _regime(spec)
    if reg == "zero":
        raise ZeroMean("E(X_1) = 0: the time limit is the law of hitting_law_rho")
    g = find_real_zeros(spec, 0.0)[0] if reg == "negative" else 0.0
    d1 = float(np.real(eval_phi_derivative(spec, -g, 1)))
    d2 = float(np.real(eval_phi_derivative(spec, -g, 2)))
    return GaussianLimit(shift=1.0 / d1, variance=-d2 / d1**3, gamma=float(g), regime=reg)


def hitting_law_rho(spec: ProcessSpec, theta: float) -> float:
    """Laplace transform e^{−√(2θ/φ''(0))} of the zero-mean time limit T_x/x²."""
    if not is_zero_mean(spec):
        raise WrongRegime("hitting_law_rho needs E(X_1) = 0")
    if theta < 0:
        raise ValueError("theta must be >= 0")
    return math.exp(-math.sqrt(2.0 * theta / phi_second_at_zero(spec)))


def rho_cdf(spec: ProcessSpec, s) -> np.ndarray:
    """CDF of ϱ, the hitting time of level φ''(0)^{-1/2} by a standard BM."""
    a = 1.0 / math.sqrt(phi_second_at_zero(spec))
    s = np.asarray(s, dtype=float)
    out = np.zeros(s.shape)
    pos = s > 0
    out[pos] = 2.0 * stats.norm.sf(a / np.sqrt(s[pos]))
    return out


# ---------------------------------------------------------------------------
# overshoot / undershoot


def _parts(measure):
    return measure.parts if isinstance(measure, MeasureSum) else (measure,)


def nu_integral(measure, f: Callable, a: float = 0.0, b: float = math.inf) -> float:
    """∫_{(a, b]} f(y) ν(dy) over the positive part, family by family."""
    tot = 0.0
    for p in _parts(measure):
        if isinstance(p, Atoms):
            for y, lam in p.atoms:
                if y > 0 and a < y <= b:
                    tot += lam * float(f(y))
            continue
        lo = max(a, 0.0)
        brk = [v for v in getattr(p, "breaks", ()) if lo < v < b]
        cut = getattr(p, "cutoff", None)
        if cut is not None and lo < cut < b:
            brk.append(cut)
        edges = [lo] + sorted(brk) + [b]
        for u, v in zip(edges[:-1], edges[1:]):
            if v <= u:
                continue
            tot += integrate.quad(_product(f, p), u, v, limit=400, epsabs=1e-15, epsrel=1e-11)[0]
    return tot


def _product(f, part):
    def g(y):
        d = float(part.density(np.array([y]))[0])
        if d == 0.0:
            return 0.0
        with np.errstate(over="ignore"):
            v = float(f(y)) * d
        return v if math.isfinite(v) else 0.0

    return g


def _support_max(measure) -> float:
    top = 0.0
    for p in _parts(measure):
        if isinstance(p, Atoms):
            top = max([top] + [y for y, _ in p.atoms])
        elif hasattr(p, "breaks"):
            top = max(top, p.breaks[-1])
        else:
            return math.inf
    return top


def _atom_points(measure) -> list[float]:
    pts = []
    for p in _parts(measure):
        if isinstance(p, Atoms):
            pts += [y for y, _ in p.atoms if y > 0]
        elif hasattr(p, "breaks"):
            pts += [v for v in p.breaks if v > 0]
        elif hasattr(p, "cutoff"):
            pts.append(p.cutoff)
    return sorted(set(pts))


@dataclass(frozen=True)
class OvershootLaw:
    """Limit law w of (K_x, L_x) for a spectrally positive process.

    Attributes
    ----------
    regime
        ``"negative"``, ``"positive"`` or ``"zero"`` (sign of E X₁).
    norm
        −1/E X₁, 1/E X₁ or 1/φ''(0).
    atom
        Mass of the point (0, 0) (diffusive crossing).
    gamma
        γ₀(0), γ₀*(0) or 0 depending on the regime.
    """

    regime: str
    norm: float
    atom: float
    gamma: float
    measure: object = field(repr=False)

    def g(self, l) -> np.ndarray:
        l = np.asarray(l, dtype=float)
        if self.regime == "negative":
            return np.expm1(self.gamma * l)
        if self.regime == "positive":
            return -np.expm1(-self.gamma * l)
        return 2.0 * l

    def G(self, s) -> np.ndarray:
        """∫_0^s g(l) dl."""
        s = np.asarray(s, dtype=float)
        γ = self.gamma
        if self.regime == "negative":
            return (np.expm1(γ * s) - γ * s) / γ
        if self.regime == "positive":
            return s + np.expm1(-γ * s) / γ
        return s * s

    def l_density(self, l) -> np.ndarray:
        """Density of L on (0, ∞): norm · g(l) · ν([l, ∞))."""
        l = np.asarray(l, dtype=float)
        tail = self.measure.tail_pos(l)
        if self.regime == "negative":
            # (e^{γl} − 1)ν̄(l) with the growing factor folded into the tail
            tilt = self.measure.tail_pos_tilted(l, self.gamma)
            out = self.norm * np.maximum(tilt - tail, 0.0)
            small = self.gamma * l < 1e-3
            near = self.norm * np.expm1(np.minimum(self.gamma * l, 1e-3)) * tail
            out = np.where(small, near, out)
            return np.where(l > 0, out, 0.0)
        with np.errstate(over="ignore", invalid="ignore"):
            out = self.norm * self.g(l) * tail
        return np.where((l > 0) & (tail > 0), out, 0.0)

    def density(self, k, l) -> np.ndarray:
        """Lebesgue density of the continuous part (measures with a density)."""
        k = np.asarray(k, dtype=float)
        l = np.asarray(l, dtype=float)
        d = self.norm * self.g(l) * self.measure.density(k + l)
        return np.where((k >= 0) & (l > 0), d, 0.0)

    def conditional_s_density(self, s, l) -> np.ndarray:
        """Density of S = K + L given L = l: ν(ds) 1_{s>l}/ν([l, ∞))."""
        s = np.asarray(s, dtype=float)
        l = np.asarray(l, dtype=float)
        t = self.measure.tail_pos(l)
        return np.where(s > l, self.measure.density(s) / np.where(t > 0, t, np.inf), 0.0)

    def continuous_mass(self) -> float:
        """∫_0^∞ l_density by adaptive quadrature, split at jumps of ν([l, ∞))."""
        top = _effective_top(self)
        pts = [p for p in _atom_points(self.measure) if p < top]
        # dyadic panels keep slowly decaying densities resolved
        dyadic = [2.0**j for j in range(int(math.log2(top)) + 1) if 2.0**j < top] if top > 1 else []
        f = lambda l: float(self.l_density(np.array([l]))[0])  # noqa: E731
        edges = sorted(set([0.0] + pts + dyadic + [top]))
        tot = 0.0
        for u, v in zip(edges[:-1], edges[1:]):
            if v > u:
                tot += integrate.quad(f, u, v, limit=400, epsabs=1e-15, epsrel=1e-12)[0]
        return tot

    def total_mass(self) -> float:
        return self.atom + self.continuous_mass()

    def table(self, n_nodes: int = 4096):
        """Tabulated CDF of L on log-spaced nodes (first node 0)."""
        return _tabulate(self, n_nodes)

    def l_cdf(self, l) -> np.ndarray:
        """P(L ≤ l) including the atom at 0."""
        nodes, cdf = self.table()
        ip = interpolate.PchipInterpolator(nodes, cdf, extrapolate=False)
        l = np.asarray(l, dtype=float)
        out = ip(np.clip(l, 0.0, nodes[-1]))
        return np.where(l < 0, 0.0, np.where(l >= nodes[-1], 1.0, out))

    def to_csv(self, path, n_nodes: int = 4096) -> None:
        nodes, cdf = self.table(n_nodes)
        with open(path, "w") as fh:
            fh.write("l,cdf\n")
            for a, b in zip(nodes, cdf):
                fh.write(f"{a!r},{b!r}\n")


def overshoot_law(spec: ProcessSpec, regime: str | None = None) -> OvershootLaw:
    """Closed-form limit law of (K_x, L_x) for spectrally positive specs.

    Raises
    ------
    TwoSidedUnsupported
        The measure charges (−∞, 0).
    WrongRegime
        ``regime`` disagrees with the sign of E(X₁).
    NoNegativeZero
        E(X₁) < 0 but no Lundberg exponent exists (heavy right tail).
    """
    if not spec.spectrally_positive:
        raise TwoSidedUnsupported(
            "analytic w needs only positive jumps; use the Monte Carlo triplet law"
        )
    actual = _regime(spec)
    if regime is not None and regime != actual:
        raise WrongRegime(f"requested regime {regime!r} but E(X_1) gives {actual!r}")
    E = mean_x1(spec)
    if actual == "negative":
        g = find_real_zeros(spec, 0.0)[0]
        if g <= 0:
            raise NoNegativeZero("no Lundberg exponent: the conditional limit law is not of this form")
        norm = -1.0 / E
        atom = norm * g / 2.0
    elif actual == "positive":
        g = find_real_zeros(spec, 0.0)[1]
        norm = 1.0 / E
        atom = norm * g / 2.0
    else:
        g = 0.0
        norm = 1.0 / phi_second_at_zero(spec)
        atom = norm
    return OvershootLaw(actual, float(norm), float(atom), float(g), spec.measure)


def _effective_top(law: OvershootLaw) -> float:
    """Support end of L, or where its density times l drops below 1e-16."""
    top = _support_max(law.measure)
    if math.isfinite(top):
        return top
    top = 1.0
    while top < 1e6 and float(law.l_density(np.array([top]))[0]) * top > 1e-16:
        top *= 2.0
    return top


def _tabulate(law: OvershootLaw, n_nodes: int):
    top = _effective_top(law)
    lo = top * 1e-9
    nodes = np.concatenate([[0.0], np.geomspace(lo, top, n_nodes - 1)])
    kinks = [p for p in _atom_points(law.measure) if 0 < p < top]
    nodes = np.unique(np.concatenate([nodes, kinks]))
    # Gauss–Legendre on each cell; ν([l,∞)) is smooth inside cells
    xg, wg = np.polynomial.legendre.leggauss(8)
    a, b = nodes[:-1], nodes[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    pts = mid[:, None] + half[:, None] * xg[None, :]
    # evaluate the tail just inside each cell to respect right-continuity
    vals = law.l_density(pts)
    cell = (vals * wg[None, :]).sum(axis=1) * half
    cdf = law.atom + np.concatenate([[0.0], np.cumsum(cell)])
    cdf = np.maximum.accumulate(np.minimum(cdf, 1.0))
    cdf[-1] = max(cdf[-1], cdf[-2])
    return nodes, cdf


def sample_overshoot_law(law: OvershootLaw, n: int, rng_seed: int = 0):
    """Draw ``n`` i.i.d. (K, L) pairs from w.

    L comes from the tabulated CDF by inverse interpolation; given L = l,
    S = K + L is drawn from ν restricted to (l, ∞).
    """
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    nodes, cdf = law.table()
    total = cdf[-1]
    u = rng.random(n) * total
    k = np.zeros(n)
    l = np.zeros(n)
    cont = u > law.atom
    if np.any(cont):
        # strictly increasing knots for the inverse map
        keep = np.concatenate([[True], np.diff(cdf) > 0])
        inv = interpolate.PchipInterpolator(cdf[keep], nodes[keep])
        lv = np.clip(inv(u[cont]), 0.0, nodes[-1])
        sv = law.measure.sample_above(lv, rng)
        l[cont] = lv
        k[cont] = np.maximum(np.asarray(sv, dtype=float) - lv, 0.0)
    return k, l


# ---------------------------------------------------------------------------
# jump size at passage


@dataclass(frozen=True)
class JumpSizeLaw:
    """w₀(ds) = norm [γ/2 δ₀ + (e^{γs} − 1 − γs)/γ ν(ds)]."""

    atom: float
    norm: float
    gamma: float
    measure: object = field(repr=False)

    def weight(self, s) -> np.ndarray:
        """Density of the continuous part with respect to ν."""
        s = np.asarray(s, dtype=float)
        γ = self.gamma
        return self.norm * (np.expm1(γ * s) - γ * s) / γ

    def cdf(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.array(
            [self.atom + nu_integral(self.measure, self.weight, 0.0, v) if v >= 0 else 0.0 for v in s]
        )
        return out

    def laplace(self, theta: float) -> float:
        """∫ e^{−θs} w₀(ds)."""
        f = lambda s: np.exp(-theta * s) * self.weight(s)  # noqa: E731
        return self.atom + nu_integral(self.measure, f)


def jump_size_limit_w0(spec: ProcessSpec) -> JumpSizeLaw:
    law = overshoot_law(spec)
    if law.regime != "negative":
        raise WrongRegime("w0 display is stated for E(X_1) < 0")
    return JumpSizeLaw(law.atom, law.norm, law.gamma, spec.measure)


# ---------------------------------------------------------------------------
# Berry–Esseen probe


@dataclass(frozen=True)
class BerryEsseenReport:
    x: tuple[float, ...]
    n_hits: tuple[int, ...]
    distance: tuple[float, ...]
    slope: float
    slope_ci: tuple[float, float]

    @property
    def negative_at_95(self) -> bool:
        return self.slope_ci[1] < 0

    def to_dict(self) -> dict:
        return {
            "rows": [
                {"x": a, "n_hits": b, "distance": c}
                for a, b, c in zip(self.x, self.n_hits, self.distance)
            ],
            "slope": self.slope,
            "slope_ci95": list(self.slope_ci),
            "negative_at_95": self.negative_at_95,
        }


def sup_distance(z: np.ndarray, cdf: Callable) -> float:
    """Kolmogorov distance between the ECDF of ``z`` and ``cdf``.

    Both one-sided limits are compared at every distinct sample value, so
    ties and atoms of ``cdf`` are handled.
    """
    u, cnt = np.unique(np.asarray(z, dtype=float), return_counts=True)
    n = cnt.sum()
    right = np.cumsum(cnt) / n
    left = right - cnt / n
    F_r = cdf(u)
    F_l = cdf(np.nextafter(u, -np.inf))
    return float(max(np.max(np.abs(right - F_r)), np.max(np.abs(left - F_l))))


def berry_esseen_probe(
    spec: ProcessSpec,
    x_list: Sequence[float],
    n_paths: int = 100_000,
    seed: int = 0,
    n_boot: int = 200,
    threads: int | None = None,
    backend: str | None = None,
) -> BerryEsseenReport:
    """Sup-CDF distance of the normalized time to its Gaussian limit per level.

    The log-log slope confidence band comes from a bootstrap over hits.
    """
    from .mc.engine import SimConfig, empirical_triplet_law

    lim = gaussian_limit(spec)
    rng = np.random.Generator(np.random.PCG64(seed + 7919))
    xs, hits, dist, boots = [], [], [], []
    for i, x in enumerate(x_list):
        cfg = SimConfig(n_paths=n_paths, x=float(x), seed=seed + i, threads=threads, backend=backend)
        tl = empirical_triplet_law(spec, float(x), cfg)
        z = tl.z
        xs.append(float(x))
        hits.append(tl.n_hits)
        dist.append(sup_distance(z, lim.cdf))
        boots.append([sup_distance(rng.choice(z, z.size), lim.cdf) for _ in range(n_boot)])
    lx = np.log(xs)
    slope = float(np.polyfit(lx, np.log(dist), 1)[0])
    bs = np.array(boots).T  # (n_boot, len(x))
    slopes = np.array([np.polyfit(lx, np.log(row), 1)[0] for row in bs])
    ci = (float(np.quantile(slopes, 0.025)), float(np.quantile(slopes, 0.975)))
    return BerryEsseenReport(tuple(xs), tuple(hits), tuple(dist), slope, ci)


# ---------------------------------------------------------------------------
# two-dimensional Kolmogorov–Smirnov statistic


def ks_2d(a: np.ndarray, b: np.ndarray, n_eval: int = 400, seed: int = 0) -> float:
    """Fasano–Franceschini quadrant statistic between two 2-d samples.

    ``a`` and ``b`` are (n, 2) arrays. Quadrant fractions are evaluated at
    ``n_eval`` points drawn from the pooled sample.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    rng = np.random.Generator(np.random.PCG64(seed))
    pool = np.concatenate([a, b])
    pts = pool[rng.choice(pool.shape[0], min(n_eval, pool.shape[0]), replace=False)]
    worst = 0.0
    for px, py in pts:
        fa = _quadrants(a, px, py)
        fb = _quadrants(b, px, py)
        worst = max(worst, float(np.max(np.abs(fa - fb))))
    return worst


def _quadrants(s, px, py) -> np.ndarray:
    lx = s[:, 0] <= px
    ly = s[:, 1] <= py
    n = s.shape[0]
    return np.array(
        [
            np.count_nonzero(lx & ly),
            np.count_nonzero(lx & ~ly),
            np.count_nonzero(~lx & ly),
            np.count_nonzero(~lx & ~ly),
        ]
    ) / n


@dataclass(frozen=True)
class KS2DResult:
    statistic: float
    critical: float
    level: float

    @property
    def passed(self) -> bool:
        return self.statistic < self.critical


def ks_2d_test(
    k: np.ndarray,
    l: np.ndarray,
    law: OvershootLaw,
    n_rep: int = 100,
    level: float = 0.01,
    seed: int = 0,
    n_eval: int = 400,
) -> KS2DResult:
    """Compare empirical (K, L) with w; the critical value comes from
    resampling pairs of same-size samples from w itself."""
    n = len(k)
    emp = np.column_stack([k, l])
    ref = np.column_stack(sample_overshoot_law(law, n, seed + 1))
    stat = ks_2d(emp, ref, n_eval, seed)
    null = []
    for r in range(n_rep):
        s1 = np.column_stack(sample_overshoot_law(law, n, seed + 1000 + 2 * r))
        s2 = np.column_stack(sample_overshoot_law(law, n, seed + 1001 + 2 * r))
        null.append(ks_2d(s1, s2, n_eval, seed + r))
    return KS2DResult(stat, float(np.quantile(null, 1 - level)), level)


def ks_critical_1d(n: int, level: float = 0.01) -> float:
    """Asymptotic one-sample KS critical value (1.628/√n at the 1% level)."""
    return float(stats.kstwobign.isf(level) / math.sqrt(n))


__all__ = [
    "BerryEsseenReport",
    "GaussianLimit",
    "JumpSizeLaw",
    "KS2DResult",
    "OvershootLaw",
    "berry_esseen_probe",
    "gaussian_limit",
    "hitting_law_rho",
    "jump_size_limit_w0",
    "ks_2d",
    "ks_2d_test",
    "ks_critical_1d",
    "nu_integral",
    "overshoot_law",
    "rho_cdf",
    "sample_overshoot_law",
    "sup_distance",
]
