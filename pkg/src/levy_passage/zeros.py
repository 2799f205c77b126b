"""Zeros of φ_θ = φ − θ in a vertical strip.

Real zeros come from convexity of φ on the real line (one root on each side
of the minimiser). Complex zeros are located by an argument-principle
quadtree: the winding number of φ_θ around a cell counts zeros minus poles,
declared pole orders are added back, and cells holding a single zero are
finished by Newton's method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContourThroughZero, HypothesisUnverified, Inconclusive, NoNegativeZero
from .measures import GammaMixture, MeasureSum
from .model import ProcessSpec, eval_phi, eval_phi_derivative, validate_hypotheses

REAL_TOL = 1e-12
ZERO_MEAN_TOL = 1e-10


@dataclass(frozen=True)
class ZeroReport:
    """Output of :func:`find_strip_zeros`.

    ``pairs`` holds one representative per conjugate pair as ``γ`` (the zero
    sits at ``-γ``) with ``Im γ >= 0``; real ``γ`` appear once. ``zeros``
    lists every zero of φ_θ found in the rectangle, conjugates included.
    """

    theta: float
    gamma0: float
    gamma0_star: float
    pairs: tuple[tuple[complex, int], ...]
    strip: tuple[float, float]
    gamma0_multiplicity: int
    zeros: tuple[tuple[complex, int], ...] = ()
    winding_total: int = 0
    pole_count: int = 0
    height: float = 0.0

    @property
    def strip_count(self) -> int:
        """Number of poles of the transform in the strip (with multiplicity)."""
        n = 1
        for g, m in self.pairs:
            n += m if abs(g.imag) == 0 else 2 * m
        return n

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "gamma0": self.gamma0,
            "gamma0_star": self.gamma0_star,
            "gamma0_multiplicity": self.gamma0_multiplicity,
            "pairs": [{"re": g.real, "im": g.imag, "multiplicity": m} for g, m in self.pairs],
            "strip": {"B": self.strip[0], "beta_theta": self.strip[1]},
            "winding_total": self.winding_total,
            "pole_count": self.pole_count,
            "height": self.height,
        }


# ---------------------------------------------------------------------------
# real zeros


def _phi_r(spec, q: float) -> float:
    return float(eval_phi(spec, q).real)


def _dphi_r(spec, q: float, order: int = 1) -> float:
    return float(eval_phi_derivative(spec, q, order).real)


def _rtsafe(f, df, a: float, b: float, tol: float = REAL_TOL, maxit: int = 200) -> float:
    """Newton with bisection safeguard on a bracket with a sign change."""
    fa, fb = f(a), f(b)
    if fa == 0:
        return a
    if fb == 0:
        return b
    if fa * fb > 0:
        raise ValueError("no sign change on bracket")
    lo, hi = (a, b) if fa < 0 else (b, a)
    x = 0.5 * (a + b)
    dx_old = abs(b - a)
    dx = dx_old
    fx, dfx = f(x), df(x)
    for _ in range(maxit):
        newton_bad = ((x - hi) * dfx - fx) * ((x - lo) * dfx - fx) > 0
        if newton_bad or abs(2 * fx) > abs(dx_old * dfx):
            dx_old, dx = dx, 0.5 * (hi - lo)
            x = lo + dx
        else:
            dx_old, dx = dx, fx / dfx
            x = x - dx
        if abs(dx) < tol * 1e-2 and abs(dx) < tol:
            break
        fx, dfx = f(x), df(x)
        if fx < 0:
            lo = x
        else:
            hi = x
        if abs(hi - lo) < tol:
            x = 0.5 * (hi + lo)
            break
    return float(x)


def _scale(spec: ProcessSpec) -> float:
    return 1.0 + abs(spec.drift) + spec.measure.total_mass()


def is_zero_mean(spec: ProcessSpec) -> bool:
    return abs(_dphi_r(spec, 0.0)) <= ZERO_MEAN_TOL * _scale(spec)


def _left_limit_points(spec: ProcessSpec):
    """Points marching to the left end of the real domain of φ."""
    r = spec.r_nu
    if not math.isfinite(r):
        a = -1.0
        for _ in range(200):
            yield a
            a *= 2
    elif r > 0:
        for k in range(1, 200):
            yield -r * (1 - 2.0**-k)


def _minimizer(spec: ProcessSpec) -> float:
    d0 = _dphi_r(spec, 0.0)
    if is_zero_mean(spec):
        return 0.0
    f = lambda q: _dphi_r(spec, q)  # noqa: E731
    g = lambda q: _dphi_r(spec, q, 2)  # noqa: E731
    if d0 > 0:
        for a in _left_limit_points(spec):
            if f(a) < 0:
                return _rtsafe(f, g, a, 0.0)
        return -spec.r_nu  # φ decreasing up to the boundary
    b = 1.0
    while f(b) < 0:
        b *= 2
    return _rtsafe(f, g, 0.0, b)


def kappa_cap(spec: ProcessSpec) -> float:
    """Largest θ for which φ(-γ) = θ still has a root inside (-r_ν, 0]."""
    if not math.isfinite(spec.r_nu) or spec.meromorphic.poles:
        return math.inf
    if spec.r_nu == 0:
        return 0.0
    return _phi_r(spec, -spec.r_nu * (1 - 1e-12))


def find_real_zeros(spec: ProcessSpec, theta: float = 0.0) -> tuple[float, float]:
    """Return (γ₀(θ), γ₀*(θ)) with φ(-γ₀) = θ = φ(γ₀*).

    Raises
    ------
    NoNegativeZero
        When φ stays below θ on the whole of (-r_ν, 0].
    """
    if theta < 0:
        raise ValueError("theta must be >= 0")
    qmin = _minimizer(spec)
    f = lambda q: _phi_r(spec, q) - theta  # noqa: E731
    df = lambda q: _dphi_r(spec, q)  # noqa: E731
    # left root
    left_top = min(qmin, 0.0)
    if theta == 0 and qmin >= 0:
        g0 = 0.0
    else:
        g0 = None
        if spec.r_nu > 0:
            for a in _left_limit_points(spec):
                if a >= left_top:
                    continue
                if f(a) > 0:
                    g0 = -_rtsafe(f, df, a, left_top)
                    break
        if g0 is None:
            raise NoNegativeZero(
                "phi - theta has no zero in (-r_nu, 0]; F decays like exp(-(r_nu - eps) x)"
            )
    # right root
    right_bot = max(qmin, 0.0)
    if theta == 0 and qmin <= 0:
        gs = 0.0
    else:
        b = max(1.0, 2 * right_bot)
        while f(b) <= 0:
            b *= 2
        gs = _rtsafe(f, df, right_bot, b)
    return float(max(g0, 0.0)), float(max(gs, 0.0))


def beta_theta(spec: ProcessSpec, gamma0_star: float) -> float:
    """Right edge of the strip."""
    if gamma0_star > 0:
        return gamma0_star / 2
    return min(1.0, spec.r_nu / 4)


# ---------------------------------------------------------------------------
# argument principle


def _phi_theta(spec, theta, z):
    return eval_phi(spec, np.asarray(z, dtype=complex)) - theta


class _Tracker:
    """Adaptive phase tracking of φ_θ along straight segments."""

    def __init__(self, spec: ProcessSpec, theta: float, tol: float = 1e-10):
        self.spec = spec
        self.theta = theta
        self.tol = tol

    def _spacing(self, a: complex, b: complex) -> float:
        """Initial sample spacing: finer when a pole sits near the segment."""
        h = 0.25
        d = b - a
        for p, _ in self.spec.meromorphic.poles:
            t = min(1.0, max(0.0, ((p - a) * d.conjugate()).real / max(abs(d) ** 2, 1e-300)))
            h = min(h, 0.1 * max(abs(a + t * d - p), 1e-6))
        return h

    def winding(self, a: complex, b: complex) -> float:
        """Total argument change of φ_θ from a to b, in units of 2π."""
        n0 = 16 + int(abs(b - a) / self._spacing(a, b))
        z = a + (b - a) * np.linspace(0.0, 1.0, n0 + 1)
        f = np.asarray(_phi_theta(self.spec, self.theta, z), dtype=complex)
        self._check(z, f)
        za, zb, fa, fb = z[:-1], z[1:], f[:-1], f[1:]
        total = 0.0
        for _ in range(41):
            if za.size == 0:
                return total / (2 * math.pi)
            zm = 0.5 * (za + zb)
            fm = np.asarray(_phi_theta(self.spec, self.theta, zm), dtype=complex)
            self._check(zm, fm)
            dphase = np.angle(fb / fa)
            d1, d2 = np.angle(fm / fa), np.angle(fb / fm)
            # accept only when the halves agree with the whole (guards aliasing)
            ok = (np.abs(dphase) < 0.5) & (np.abs(d1 + d2 - dphase) < 1e-6)
            total += float(dphase[ok].sum())
            bad = ~ok
            za, zb, fa, fb = (np.concatenate([za[bad], zm[bad]]), np.concatenate([zm[bad], zb[bad]]),
                              np.concatenate([fa[bad], fm[bad]]), np.concatenate([fm[bad], fb[bad]]))
        raise ContourThroughZero(f"phase tracking failed near {za[0]}")

    def _check(self, z, f) -> None:
        near = np.abs(f) < self.tol * np.maximum(1.0, np.abs(z) ** 2)
        if near.any():
            raise ContourThroughZero(f"edge passes a zero near {z[near][0]}")

    def count(self, x0, x1, y0, y1) -> int:
        """Zeros minus poles inside [x0, x1] x [y0, y1]."""
        c = [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1)]
        w = sum(self.winding(c[i], c[(i + 1) % 4]) for i in range(4))
        n = round(w)
        if abs(w - n) > 1e-3:
            raise ContourThroughZero(f"non-integer winding {w}")
        return int(n)


def _poles_inside(spec, x0, x1, y0, y1) -> int:
    tot = 0
    for z, o in spec.meromorphic.poles:
        if x0 < z.real < x1 and y0 < z.imag < y1:
            tot += o
    return tot


def _newton(spec, theta, z0: complex, mult: int = 1, maxit: int = 100):
    z = complex(z0)
    for _ in range(maxit):
        f = complex(_phi_theta(spec, theta, z))
        d = complex(eval_phi_derivative(spec, z, 1))
        if d == 0:
            return None
        step = mult * f / d
        z -= step
        if abs(step) < 1e-15 * max(1.0, abs(z)):
            break
    if not np.isfinite(z):
        return None
    return z


@dataclass
class _Search:
    spec: ProcessSpec
    theta: float
    tracker: _Tracker
    rng: np.random.Generator
    found: list = field(default_factory=list)

    def split_point(self, lo, hi, avoid=()):
        for _ in range(16):
            s = lo + (hi - lo) * self.rng.uniform(0.4, 0.6)
            if all(abs(s - a) > 1e-6 * max(1.0, abs(a)) + 1e-9 for a in avoid):
                return s
        return 0.5 * (lo + hi)

    def cell(self, x0, x1, y0, y1, z_count: int, depth: int = 0):
        if z_count <= 0:
            return
        size = max(x1 - x0, y1 - y0)
        p_in = _poles_inside(self.spec, x0, x1, y0, y1)
        if p_in == 0 and (z_count == 1 or size < 1e-3):
            mult = z_count
            z = _newton(self.spec, self.theta, complex(0.5 * (x0 + x1), 0.5 * (y0 + y1)), mult)
            # only a root inside this cell is the one the count refers to
            pad = 1e-10 * max(1.0, size)
            inside = z is not None and x0 - pad <= z.real <= x1 + pad and y0 - pad <= z.imag <= y1 + pad
            if inside and (mult == 1 or _mult_ok(self.spec, self.theta, z, mult)):
                self.found.append((z, mult))
                return
            if size < 1e-9:
                raise Inconclusive(f"cannot isolate zero near {x0}+{y0}j")
        pole_re = [p.real for p, _ in self.spec.meromorphic.poles]
        xm = self.split_point(x0, x1, pole_re)
        ym = self.split_point(y0, y1, (0.0,))
        subs = [(x0, xm, y0, ym), (xm, x1, y0, ym), (x0, xm, ym, y1), (xm, x1, ym, y1)]
        counts = []
        for c in subs:
            counts.append(self.tracker.count(*c) + _poles_inside(self.spec, *c))
        if sum(counts) != z_count:
            raise ContourThroughZero("sub-cell counts do not add up")
        for c, k in zip(subs, counts):
            self.cell(*c, k, depth + 1)


def _mult_ok(spec, theta, z, mult) -> bool:
    try:
        return multiplicity_at(spec, theta, z) == mult
    except (ValueError, Inconclusive):
        return False


def _initial_height(spec: ProcessSpec, theta: float, B: float) -> float:
    return max(4.0 * B, 4.0 * math.sqrt(1.0 + theta + abs(spec.drift) ** 2 + spec.measure.total_mass()))


def find_strip_zeros(
    spec: ProcessSpec,
    theta: float = 0.0,
    B: float = 4.0,
    *,
    seed: int = 12345,
    max_retries: int = 8,
) -> ZeroReport:
    """All zeros of φ_θ with -B <= Re q <= β_θ, certified by winding counts.

    Raises
    ------
    HypothesisUnverified
        The measure family fails the structural growth condition.
    ContourThroughZero
        Every jittered contour still passed through a zero.
    """
    hyp = validate_hypotheses(spec, B)
    if not hyp.satisfied:
        raise HypothesisUnverified(hyp.reason)
    g0, gs = find_real_zeros(spec, theta)
    bt = beta_theta(spec, gs)
    tracker = _Tracker(spec, theta)
    rng = np.random.default_rng(seed)
    last_exc: Exception | None = None
    for attempt in range(max_retries):
        jit = 0.0 if attempt == 0 else rng.uniform(-1e-3, 1e-3) * max(1.0, B)
        x0 = -B + jit
        try:
            R = _initial_height(spec, theta, B) * (1 + (0.013 * attempt))
            # grow R until the count is stable over two consecutive doublings
            counts = []
            for _ in range(12):
                k = tracker.count(x0, bt, -R, R) + _poles_inside(spec, x0, bt, -R, R)
                counts.append((R, k))
                if len(counts) >= 3 and counts[-1][1] == counts[-2][1] == counts[-3][1]:
                    break
                R *= 2
            R, total = counts[-3] if len(counts) >= 3 else counts[-1]
            search = _Search(spec, theta, tracker, rng)
            search.cell(x0, bt, -R, R, total)
            break
        except ContourThroughZero as exc:
            last_exc = exc
    else:
        raise ContourThroughZero(f"all {max_retries} jittered contours failed: {last_exc}")
    zeros = _dedupe(search.found)
    zeros = _symmetrize(zeros)
    mult0 = 2 if (theta == 0 and is_zero_mean(spec)) else 1
    pairs = []
    for z, m in zeros:
        g = -z
        if abs(g.real - g0) < 1e-8 and abs(g.imag) < 1e-8:
            continue
        if abs(z.real - gs) < 1e-8 and abs(z.imag) < 1e-8:
            continue
        if g.imag < -1e-12:
            continue
        if abs(g.imag) <= 1e-12:
            g = complex(g.real, 0.0)
        pairs.append((g, m))
    pairs.sort(key=lambda t: (round(t[0].real, 10), abs(t[0].imag)))
    return ZeroReport(
        theta=float(theta),
        gamma0=g0,
        gamma0_star=gs,
        pairs=tuple(pairs),
        strip=(float(B), float(bt)),
        gamma0_multiplicity=mult0,
        zeros=tuple(zeros),
        winding_total=int(sum(m for _, m in zeros)),
        pole_count=_poles_inside(spec, x0, bt, -R, R),
        height=float(R),
    )


def _dedupe(found):
    out: list[tuple[complex, int]] = []
    for z, m in found:
        for i, (w, n) in enumerate(out):
            if abs(z - w) < 1e-8 * max(1.0, abs(z)):
                break
        else:
            out.append((z, m))
    return out


def _symmetrize(zeros):
    """Snap near-real zeros to the axis and pair conjugates exactly."""
    out = []
    for z, m in zeros:
        if abs(z.imag) < 1e-10 * max(1.0, abs(z)):
            z = complex(z.real, 0.0)
        out.append((z, m))
    uppers = [(z, m) for z, m in out if z.imag > 0]
    reals = [(z, m) for z, m in out if z.imag == 0]
    sym = reals + uppers + [(z.conjugate(), m) for z, m in uppers]
    return sorted(sym, key=lambda t: (-t[0].real, abs(t[0].imag), t[0].imag))


# ---------------------------------------------------------------------------


def multiplicity_at(spec: ProcessSpec, theta: float, z: complex, max_order: int = 6) -> int:
    """Order of the zero of φ_θ at ``z``.

    Raises
    ------
    Inconclusive
        Orders 1..max_order all vanish under tolerance.
    """
    z = complex(z)
    if abs(complex(_phi_theta(spec, theta, z))) > 1e-9 * max(1.0, abs(z) ** 2):
        raise ValueError(f"phi_theta({z}) is not zero")
    for k in range(1, max_order + 1):
        d = abs(complex(eval_phi_derivative(spec, z, k)))
        scale = max(1.0, abs(z)) ** max(0, 2 - k)
        if d > 1e-6 * scale:
            return k
    raise Inconclusive(f"orders 1..{max_order} vanish at {z}")


def count_profile(spec: ProcessSpec, thetas, B: float) -> list[dict]:
    """Number of strip zeros per θ; flags θ where the count changes."""
    rows = []
    prev = None
    for th in thetas:
        rep = find_strip_zeros(spec, float(th), B)
        n = rep.strip_count
        rows.append({"theta": float(th), "p": n, "changed": prev is not None and n != prev})
        prev = n
    return rows


# ---------------------------------------------------------------------------
# companion-matrix oracle (gamma mixtures only)


def _gamma_terms(spec: ProcessSpec):
    m = spec.measure
    parts = m.parts if isinstance(m, MeasureSum) else (m,)
    terms = []
    for p in parts:
        if isinstance(p, GammaMixture):
            terms.extend(p.terms)
        elif p.total_mass() > 0:
            raise TypeError("companion oracle needs a pure gamma mixture")
    return terms


def numerator_polynomial(spec: ProcessSpec, theta: float) -> np.polynomial.Polynomial:
    """(φ(q) − θ)·Π (q+β)^{N_β} as a polynomial in q."""
    P = np.polynomial.Polynomial
    terms = _gamma_terms(spec)
    order: dict[float, int] = {}
    for _, beta, m in terms:
        order[beta] = max(order.get(beta, 0), m + 1)
    D = P([1.0])
    for beta, n in order.items():
        D = D * P([beta, 1.0]) ** n
    mass0 = sum(rho * math.factorial(m) / beta ** (m + 1) for rho, beta, m in terms)
    cprime = spec.drift + spec.measure.small_mean()
    num = P([-theta - mass0, cprime, 0.5]) * D
    for rho, beta, m in terms:
        rest = P([1.0])
        for b2, n2 in order.items():
            k = n2 - (m + 1) if b2 == beta else n2
            rest = rest * P([b2, 1.0]) ** k
        num = num + rho * math.factorial(m) * rest
    return num


def companion_zeros(spec: ProcessSpec, theta: float, B: float, beta_t: float | None = None):
    """Roots of the numerator polynomial restricted to -B <= Re q <= β_θ."""
    if beta_t is None:
        beta_t = beta_theta(spec, find_real_zeros(spec, theta)[1])
    roots = numerator_polynomial(spec, theta).roots()
    return sorted(
        (complex(r) for r in roots if -B <= r.real <= beta_t),
        key=lambda z: (-z.real, abs(z.imag), z.imag),
    )
