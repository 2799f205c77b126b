"""Finite-activity Lévy measure families.

Every family is an immutable dataclass exposing the same small protocol:
the compensated exponent integral and its derivatives, divided differences
of the positive-part transform, moments, exponential abscissas, pole data,
tail masses, conditional sampling above a level and a flat encoding used by
the Monte Carlo kernels.

The compensated integral is

    I(q) = ∫ (e^{-qy} - 1 + q y 1_{|y|<1}) ν(dy),

and ``comp_integral(q, order=k)`` returns its k-th derivative in q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy import integrate, special

from ._special import exprel, exprel2, gl_nodes

MOMENT_CAP = 64.0


class JumpTable(NamedTuple):
    """Flat description of ν/ν(ℝ) consumed by the simulation kernels.

    ``kind`` codes: 0 atom at ``p1``; 1 gamma with shape ``p1`` and scale
    ``p2``; 2 polynomial density on ``[p1, p2]`` sampled by rejection with
    envelope ``bound`` and coefficients ``coefs[off:off+deg]``; 3 Pareto with
    scale ``p1`` and tail index ``p2``.
    """

    rate: float
    cumw: np.ndarray
    kind: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    bound: np.ndarray
    off: np.ndarray
    deg: np.ndarray
    coefs: np.ndarray


def _as_complex(q) -> np.ndarray:
    return np.atleast_1d(np.asarray(q, dtype=complex))


def _gl_count(q: np.ndarray, width: float, degree: int) -> int:
    qmax = float(np.max(np.abs(q))) if q.size else 0.0
    return int(min(4096, 24 + degree + math.ceil(0.8 * qmax * width)))


class _Base:
    """Shared derived quantities; subclasses implement the primitives."""

    kind = "base"

    # -- primitives overridden by families ---------------------------------
    def mass_split(self) -> tuple[float, float]:
        """Return (ν((-∞, 0)), ν((0, ∞)))."""
        raise NotImplementedError

    def comp_integral(self, q, order: int = 0) -> np.ndarray:
        raise NotImplementedError

    def pos_divdiff(self, u, v, order: int = 0) -> np.ndarray:
        raise NotImplementedError

    def small_mean(self) -> float:
        """∫_{|y|<1} y ν(dy)."""
        raise NotImplementedError

    def big_mean(self) -> float:
        """∫_{|y|≥1} y ν(dy)."""
        raise NotImplementedError

    def second_moment(self) -> float:
        raise NotImplementedError

    def r_nu(self) -> float:
        raise NotImplementedError

    def r_nu_star(self) -> float:
        raise NotImplementedError

    def poles(self) -> list[tuple[complex, int]]:
        return []

    def extension_abscissa(self) -> float:
        """B_ν: abscissa of the meromorphic extension of the transform."""
        return math.inf

    def moment_order(self) -> float:
        return MOMENT_CAP

    def tail_pos(self, l) -> np.ndarray:
        raise NotImplementedError

    def tail_pos_tilted(self, l, s: float) -> np.ndarray:
        """ν([l, ∞)) e^{s l}, kept finite where the two factors would not be."""
        l = np.asarray(l, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            out = self.tail_pos(l) * np.exp(s * l)
        return np.where(np.isfinite(out), out, 0.0)

    def sample_above(self, l, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def density(self, y) -> np.ndarray:
        raise TypeError(f"{self.kind} has no Lebesgue density")

    def negative_nodes(self, qmax: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
        """Discrete (location, weight) quadrature of ν restricted to (-∞, 0)."""
        return np.zeros(0), np.zeros(0)

    def neg_support_lower(self) -> float:
        """Infimum of the negative support (0 when spectrally positive)."""
        return 0.0

    def truncate_below(self, k: float):
        return self

    def components(self) -> list:
        return [self]

    def structural_hypothesis(self) -> tuple[bool, str]:
        raise NotImplementedError

    def _jump_parts(self) -> list[tuple]:
        raise NotImplementedError

    # -- derived -----------------------------------------------------------
    def total_mass(self) -> float:
        a, b = self.mass_split()
        return a + b

    @property
    def spectrally_positive(self) -> bool:
        return self.mass_split()[0] == 0.0

    def jump_table(self) -> JumpTable:
        parts = self._jump_parts()
        coefs: list[float] = []
        rows = []
        for w, kind, p1, p2, bound, cf in parts:
            if w <= 0:
                continue
            rows.append((w, kind, p1, p2, bound, len(coefs), len(cf)))
            coefs.extend(cf)
        rate = float(sum(r[0] for r in rows))
        if not rows:
            z = np.zeros(0)
            zi = np.zeros(0, dtype=np.int64)
            return JumpTable(0.0, z, zi, z, z, z, zi, zi, np.zeros(1))
        w = np.array([r[0] for r in rows]) / rate
        cumw = np.cumsum(w)
        cumw[-1] = 1.0
        return JumpTable(
            rate,
            cumw,
            np.array([r[1] for r in rows], dtype=np.int64),
            np.array([r[2] for r in rows], dtype=float),
            np.array([r[3] for r in rows], dtype=float),
            np.array([r[4] for r in rows], dtype=float),
            np.array([r[5] for r in rows], dtype=np.int64),
            np.array([r[6] for r in rows], dtype=np.int64),
            np.array(coefs + [0.0], dtype=float),
        )


# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class GammaMixture(_Base):
    """ν(dy) = Σ ρ_i y^{m_i} e^{-β_i y} dy on (0, ∞).

    Parameters
    ----------
    terms : sequence of (rho, beta, m)
        Weights ``rho > 0``, rates ``beta > 0`` and integer powers ``m >= 0``.
    """

    terms: tuple[tuple[float, float, int], ...]
    kind = "gamma_mixture"

    def __post_init__(self):
        clean = []
        for t in self.terms:
            rho, beta, m = float(t[0]), float(t[1]), int(t[2])
            if not (rho > 0 and beta > 0 and m >= 0 and m == t[2]):
                raise ValueError(f"invalid gamma term {t!r}")
            clean.append((rho, beta, m))
        if not clean:
            raise ValueError("GammaMixture needs at least one term")
        object.__setattr__(self, "terms", tuple(clean))

    def _arrays(self):
        rho = np.array([t[0] for t in self.terms])
        beta = np.array([t[1] for t in self.terms])
        m = np.array([t[2] for t in self.terms])
        return rho, beta, m

    def nu_hat(self, s, order: int = 0) -> np.ndarray:
        """k-th derivative of ∫ e^{-sy} ν(dy) = Σ ρ m!/(s+β)^{m+1}."""
        s = _as_complex(s)
        out = np.zeros(s.shape, dtype=complex)
        for rho, beta, m in self.terms:
            c = rho * math.factorial(m + order) * (-1) ** order
            out += c / (s + beta) ** (m + 1 + order)
        return out

    def masses(self) -> np.ndarray:
        rho, beta, m = self._arrays()
        return rho * special.gamma(m + 1) / beta ** (m + 1)

    def mass_split(self):
        return 0.0, float(self.masses().sum())

    def small_mean(self) -> float:
        rho, beta, m = self._arrays()
        full = rho * special.gamma(m + 2) / beta ** (m + 2)
        return float(np.sum(full * special.gammainc(m + 2, beta)))

    def big_mean(self) -> float:
        rho, beta, m = self._arrays()
        full = rho * special.gamma(m + 2) / beta ** (m + 2)
        return float(np.sum(full * special.gammaincc(m + 2, beta)))

    def second_moment(self) -> float:
        rho, beta, m = self._arrays()
        return float(np.sum(rho * special.gamma(m + 3) / beta ** (m + 3)))

    def comp_integral(self, q, order: int = 0):
        q = _as_complex(q)
        if order == 0:
            return self.nu_hat(q) - self.nu_hat(0.0)[0] + q * self.small_mean()
        if order == 1:
            return self.nu_hat(q, 1) + self.small_mean()
        return self.nu_hat(q, order)

    def pos_divdiff(self, u, v, order: int = 0):
        # exact divided differences of (s+β)^{-n}
        u = _as_complex(u)
        v = _as_complex(v)
        out = np.zeros(np.broadcast(u, v).shape, dtype=complex)
        for rho, beta, m in self.terms:
            n = m + 1
            U, V = u + beta, v + beta
            a = rho * math.factorial(m)
            for j in range(n):
                if order == 0:
                    out -= a * U ** (-(j + 1)) * V ** (-(n - j))
                else:
                    out += a * (j + 1) * U ** (-(j + 2)) * V ** (-(n - j))
        return out

    def r_nu(self):
        return float(min(t[1] for t in self.terms))

    def r_nu_star(self):
        return math.inf

    def poles(self):
        order: dict[float, int] = {}
        for _, beta, m in self.terms:
            order[beta] = max(order.get(beta, 0), m + 1)
        return [(complex(-b), o) for b, o in sorted(order.items())]

    def tail_pos(self, l):
        l = np.maximum(np.asarray(l, dtype=float), 0.0)
        out = np.zeros(l.shape)
        for (rho, beta, m), mass in zip(self.terms, self.masses()):
            out = out + mass * special.gammaincc(m + 1, beta * l)
        return out

    def tail_pos_tilted(self, l, s):
        # mass · e^{(s-β)l} Σ_{j≤m} (βl)^j/j!, no underflow of e^{-βl}
        l = np.maximum(np.asarray(l, dtype=float), 0.0)
        out = np.zeros(l.shape)
        for (rho, beta, m), mass in zip(self.terms, self.masses()):
            poly = sum((beta * l) ** j / math.factorial(j) for j in range(m + 1))
            with np.errstate(over="ignore"):
                out = out + mass * poly * np.exp((s - beta) * l)
        return out

    def density(self, y):
        y = np.asarray(y, dtype=float)
        out = np.zeros(y.shape)
        pos = y > 0
        for rho, beta, m in self.terms:
            out[pos] += rho * y[pos] ** m * np.exp(-beta * y[pos])
        return out

    def sample_above(self, l, rng):
        l = np.maximum(np.asarray(l, dtype=float), 0.0)
        masses = self.masses()
        sf = np.stack(
            [special.gammaincc(m + 1, beta * l) for _, beta, m in self.terms]
        )
        w = masses[:, None] * sf
        cw = np.cumsum(w, axis=0)
        u = rng.random(l.shape) * cw[-1]
        comp = (u[None, :] > cw).sum(axis=0)
        out = np.empty(l.shape)
        v = rng.random(l.shape)
        for i, (_, beta, m) in enumerate(self.terms):
            sel = comp == i
            if np.any(sel):
                target = v[sel] * sf[i, sel]
                out[sel] = special.gammainccinv(m + 1, target) / beta
        return np.maximum(out, l)

    def structural_hypothesis(self):
        return True, "rational transform: |ν̂(q)| bounded away from the poles"

    def _jump_parts(self):
        return [
            (mass, 1, m + 1.0, 1.0 / beta, 0.0, [])
            for (rho, beta, m), mass in zip(self.terms, self.masses())
        ]


# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Atoms(_Base):
    """Finitely many atoms ν = Σ λ_i δ_{y_i}; the empty tuple gives ν = 0."""

    atoms: tuple[tuple[float, float], ...] = ()
    kind = "atoms"

    def __post_init__(self):
        clean = []
        for y, lam in self.atoms:
            y, lam = float(y), float(lam)
            if y == 0 or not lam > 0 or not math.isfinite(y):
                raise ValueError(f"invalid atom ({y}, {lam})")
            clean.append((y, lam))
        object.__setattr__(self, "atoms", tuple(clean))

    @property
    def locs(self):
        return np.array([a[0] for a in self.atoms], dtype=float)

    @property
    def lams(self):
        return np.array([a[1] for a in self.atoms], dtype=float)

    def mass_split(self):
        y, lam = self.locs, self.lams
        return float(lam[y < 0].sum()), float(lam[y > 0].sum())

    def small_mean(self):
        y, lam = self.locs, self.lams
        s = np.abs(y) < 1
        return float(np.sum(lam[s] * y[s]))

    def big_mean(self):
        y, lam = self.locs, self.lams
        s = np.abs(y) >= 1
        return float(np.sum(lam[s] * y[s]))

    def second_moment(self):
        return float(np.sum(self.lams * self.locs**2))

    def comp_integral(self, q, order: int = 0):
        q = _as_complex(q)
        y, lam = self.locs, self.lams
        if y.size == 0:
            return np.zeros(q.shape, dtype=complex)
        qy = q[..., None] * y
        if order == 0:
            comp = np.where(np.abs(y) < 1, qy, 0.0)
            vals = np.expm1(-qy) + comp
        elif order == 1:
            vals = -y * np.exp(-qy) + np.where(np.abs(y) < 1, y, 0.0)
        else:
            vals = (-y) ** order * np.exp(-qy)
        return vals @ lam

    def pos_divdiff(self, u, v, order: int = 0):
        u = _as_complex(u)
        v = _as_complex(v)
        shape = np.broadcast(u, v).shape
        y, lam = self.locs, self.lams
        keep = y > 0
        y, lam = y[keep], lam[keep]
        if y.size == 0:
            return np.zeros(shape, dtype=complex)
        u = np.broadcast_to(u, shape)[..., None]
        v = np.broadcast_to(v, shape)[..., None]
        a = u - v
        if order == 0:
            vals = -y * np.exp(-v * y) * exprel(-a * y)
        else:
            vals = y**2 * np.exp(-v * y) * exprel2(-a * y)
        return vals @ lam

    def r_nu(self):
        return math.inf

    def r_nu_star(self):
        return math.inf

    def tail_pos(self, l):
        l = np.asarray(l, dtype=float)
        y, lam = self.locs, self.lams
        keep = y > 0
        return (y[keep] >= l[..., None]).astype(float) @ lam[keep]

    def sample_above(self, l, rng):
        l = np.asarray(l, dtype=float)
        y, lam = self.locs, self.lams
        keep = y > 0
        y, lam = y[keep], lam[keep]
        w = (y > l[..., None]) * lam
        cw = np.cumsum(w, axis=-1)
        u = rng.random(l.shape) * cw[..., -1]
        idx = (u[..., None] > cw).sum(axis=-1)
        return y[np.minimum(idx, y.size - 1)]

    def negative_nodes(self, qmax=0.0):
        y, lam = self.locs, self.lams
        neg = y < 0
        return y[neg], lam[neg]

    def neg_support_lower(self):
        y = self.locs
        return float(y.min()) if y.size and y.min() < 0 else 0.0

    def truncate_below(self, k):
        return Atoms(tuple(a for a in self.atoms if a[0] >= -k))

    def structural_hypothesis(self):
        return True, "compact support: transform is entire with controlled growth"

    def _jump_parts(self):
        return [(lam, 0, y, 0.0, 0.0, []) for y, lam in self.atoms]


# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class CompactDensity(_Base):
    """Piecewise-polynomial density on a bounded interval.

    Parameters
    ----------
    breaks : sequence of float
        Increasing breakpoints ``b_0 < ... < b_k``.
    coeffs : sequence of sequences
        ``coeffs[j][i]`` is the coefficient of ``y**i`` on ``[b_j, b_{j+1}]``.
    """

    breaks: tuple[float, ...]
    coeffs: tuple[tuple[float, ...], ...]
    kind = "compact_density"
    _pieces: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        br = tuple(float(b) for b in self.breaks)
        cf = tuple(tuple(float(c) for c in row) for row in self.coeffs)
        if len(br) < 2 or any(b1 <= b0 for b0, b1 in zip(br, br[1:])):
            raise ValueError("breaks must be strictly increasing")
        if len(cf) != len(br) - 1:
            raise ValueError("need one coefficient row per piece")
        pieces = []
        for (a, b), row in zip(zip(br, br[1:]), cf):
            # split at the compensator kinks and at the origin
            cuts = [a] + [s for s in (-1.0, 0.0, 1.0) if a < s < b] + [b]
            for lo, hi in zip(cuts, cuts[1:]):
                pieces.append((lo, hi, np.polynomial.Polynomial(row)))
        for lo, hi, p in pieces:
            grid = np.linspace(lo, hi, 257)
            if np.any(p(grid) < -1e-12):
                raise ValueError("density must be nonnegative")
        object.__setattr__(self, "breaks", br)
        object.__setattr__(self, "coeffs", cf)
        object.__setattr__(self, "_pieces", tuple(pieces))

    def _piece_mass(self, lo, hi, p):
        P = p.integ()
        return float(P(hi) - P(lo))

    def mass_split(self):
        neg = sum(self._piece_mass(*pc) for pc in self._pieces if pc[1] <= 0)
        pos = sum(self._piece_mass(*pc) for pc in self._pieces if pc[0] >= 0)
        return float(neg), float(pos)

    def _moment(self, k, select):
        tot = 0.0
        for lo, hi, p in self._pieces:
            if select(lo, hi):
                P = (p * np.polynomial.Polynomial([0] * k + [1])).integ()
                tot += P(hi) - P(lo)
        return float(tot)

    def small_mean(self):
        return self._moment(1, lambda lo, hi: lo >= -1 and hi <= 1)

    def big_mean(self):
        return self._moment(1, lambda lo, hi: lo >= 1 or hi <= -1)

    def second_moment(self):
        return self._moment(2, lambda lo, hi: True)

    def _nodes(self, q, select=lambda lo, hi: True):
        ys, ws, comp = [], [], []
        for lo, hi, p in self._pieces:
            if not select(lo, hi):
                continue
            n = _gl_count(q, hi - lo, p.degree())
            y, w = gl_nodes(lo, hi, n)
            ys.append(y)
            ws.append(w * p(y))
            comp.append(np.full(n, lo >= -1 and hi <= 1))
        if not ys:
            return np.zeros(0), np.zeros(0), np.zeros(0, bool)
        return np.concatenate(ys), np.concatenate(ws), np.concatenate(comp)

    def comp_integral(self, q, order: int = 0):
        q = _as_complex(q)
        y, w, small = self._nodes(q)
        qy = q[..., None] * y
        if order == 0:
            vals = np.expm1(-qy) + np.where(small, qy, 0.0)
        elif order == 1:
            vals = -y * np.exp(-qy) + np.where(small, y, 0.0)
        else:
            vals = (-y) ** order * np.exp(-qy)
        return vals @ w

    def pos_divdiff(self, u, v, order: int = 0):
        u = _as_complex(u)
        v = _as_complex(v)
        shape = np.broadcast(u, v).shape
        big = np.concatenate([np.ravel(u), np.ravel(v)])
        y, w, _ = self._nodes(big, lambda lo, hi: lo >= 0)
        if y.size == 0:
            return np.zeros(shape, dtype=complex)
        u = np.broadcast_to(u, shape)[..., None]
        v = np.broadcast_to(v, shape)[..., None]
        a = u - v
        if order == 0:
            vals = -y * np.exp(-v * y) * exprel(-a * y)
        else:
            vals = y**2 * np.exp(-v * y) * exprel2(-a * y)
        return vals @ w

    def r_nu(self):
        return math.inf

    def r_nu_star(self):
        return math.inf

    def _pos_cdf_polys(self):
        out, acc = [], 0.0
        for lo, hi, p in self._pieces:
            if lo < 0:
                continue
            P = p.integ()
            out.append((lo, hi, P, acc - P(lo)))
            acc += P(hi) - P(lo)
        return out, acc

    def _pos_cdf(self, y):
        y = np.asarray(y, dtype=float)
        polys, _ = self._pos_cdf_polys()
        out = np.zeros(y.shape)
        for lo, hi, P, shift in polys:
            yy = np.clip(y, lo, hi)
            part = np.where(y >= lo, P(yy) + shift, 0.0)
            out = np.where(y >= lo, part, out)
        return out

    def tail_pos(self, l):
        l = np.maximum(np.asarray(l, dtype=float), 0.0)
        _, tot = self._pos_cdf_polys()
        return tot - self._pos_cdf(l)

    def density(self, y):
        y = np.asarray(y, dtype=float)
        out = np.zeros(y.shape)
        for lo, hi, p in self._pieces:
            sel = (y >= lo) & (y < hi)
            out[sel] = p(y[sel])
        return out

    def sample_above(self, l, rng):
        l = np.maximum(np.asarray(l, dtype=float), 0.0)
        _, tot = self._pos_cdf_polys()
        lo_c = self._pos_cdf(l)
        target = lo_c + rng.random(l.shape) * (tot - lo_c)
        a = np.maximum(l, 0.0)
        b = np.full(l.shape, self.breaks[-1])
        for _ in range(60):
            mid = 0.5 * (a + b)
            below = self._pos_cdf(mid) < target
            a = np.where(below, mid, a)
            b = np.where(below, b, mid)
        return 0.5 * (a + b)

    def negative_nodes(self, qmax=0.0):
        q = np.array([qmax], dtype=complex)
        y, w, _ = self._nodes(q, lambda lo, hi: hi <= 0)
        return y, w

    def neg_support_lower(self):
        return min(self.breaks[0], 0.0)

    def truncate_below(self, k):
        if self.breaks[0] >= -k:
            return self
        br, cf = [], []
        for (a, b), row in zip(zip(self.breaks, self.breaks[1:]), self.coeffs):
            if b <= -k:
                continue
            br.append(max(a, -k))
            cf.append(row)
            last = b
        if not cf:
            return Atoms(())
        return CompactDensity(tuple(br + [last]), tuple(cf))

    def structural_hypothesis(self):
        return True, "compact support: transform is entire with controlled growth"

    def _jump_parts(self):
        parts = []
        for lo, hi, p in self._pieces:
            mass = self._piece_mass(lo, hi, p)
            crit = [r.real for r in p.deriv().roots() if abs(r.imag) < 1e-12]
            pts = [lo, hi] + [r for r in crit if lo < r < hi]
            bound = 1.000001 * max(float(p(t)) for t in pts)
            parts.append((mass, 2, lo, hi, bound, list(p.coef)))
        return parts


# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class PowerTail(_Base):
    """ν(dy) = c₁ y^{-α} dy on [y₀, ∞) with α > 2."""

    amplitude: float
    exponent: float
    cutoff: float
    kind = "power_tail"

    def __post_init__(self):
        if not self.amplitude > 0 or not self.cutoff > 0:
            raise ValueError("amplitude and cutoff must be positive")
        if not self.exponent > 2:
            raise ValueError("PowerTail needs exponent > 2 for a finite mean")

    def mass_split(self):
        c, a, y0 = self.amplitude, self.exponent, self.cutoff
        return 0.0, c * y0 ** (1 - a) / (a - 1)

    def small_mean(self):
        c, a, y0 = self.amplitude, self.exponent, self.cutoff
        if y0 >= 1:
            return 0.0
        return c * (1 - y0 ** (2 - a)) / (2 - a)

    def big_mean(self):
        c, a, y0 = self.amplitude, self.exponent, self.cutoff
        return c * max(y0, 1.0) ** (2 - a) / (a - 2)

    def second_moment(self):
        c, a, y0 = self.amplitude, self.exponent, self.cutoff
        return c * y0 ** (3 - a) / (a - 3) if a > 3 else math.inf

    def density(self, y):
        y = np.asarray(y, dtype=float)
        return np.where(y >= self.cutoff, self.amplitude * np.abs(y) ** -self.exponent, 0)

    def _quad(self, f):
        c, a, y0 = self.amplitude, self.exponent, self.cutoff
        g = lambda y: c * y ** (-a) * f(y)  # noqa: E731
        pts = [y0, 1.0] if y0 < 1 else [y0]
        tot = 0.0
        if y0 < 1:
            tot += integrate.quad(g, y0, 1.0, complex_func=True, epsabs=1e-12)[0]
        tot += integrate.quad(g, max(y0, 1.0), np.inf, complex_func=True,
                              epsabs=1e-12, limit=400)[0]
        del pts
        return tot

    def comp_integral(self, q, order: int = 0):
        q = _as_complex(q)
        if np.any(q.real < 0):
            from .errors import DomainError

            raise DomainError("PowerTail exponent defined only for Re q >= 0")
        out = np.empty(q.shape, dtype=complex)
        for i, qi in np.ndenumerate(q):
            if order == 0:
                f = lambda y: np.expm1(-qi * y) + (qi * y if y < 1 else 0)  # noqa: E731
            elif order == 1:
                f = lambda y: -y * np.exp(-qi * y) + (y if y < 1 else 0)  # noqa: E731
            else:
                f = lambda y: (-y) ** order * np.exp(-qi * y)  # noqa: E731
            out[i] = self._quad(f)
        return out

    def pos_divdiff(self, u, v, order: int = 0):
        u = _as_complex(u)
        v = _as_complex(v)
        shape = np.broadcast(u, v).shape
        u = np.broadcast_to(u, shape)
        v = np.broadcast_to(v, shape)
        out = np.empty(shape, dtype=complex)
        for i in np.ndindex(shape):
            ui, vi = u[i], v[i]
            if order == 0:
                f = lambda y: -y * np.exp(-vi * y) * exprel(-(ui - vi) * y)[0]  # noqa: E731
            else:
                f = lambda y: y**2 * np.exp(-vi * y) * exprel2(-(ui - vi) * y)[0]  # noqa: E731
            out[i] = self._quad(f)
        return out

    def r_nu(self):
        return 0.0

    def r_nu_star(self):
        return math.inf

    def extension_abscissa(self):
        return 0.0

    def moment_order(self):
        return self.exponent - 1.0

    def tail_pos(self, l):
        l = np.maximum(np.asarray(l, dtype=float), self.cutoff)
        return self.amplitude * l ** (1 - self.exponent) / (self.exponent - 1)

    def sample_above(self, l, rng):
        l = np.maximum(np.asarray(l, dtype=float), self.cutoff)
        return l * rng.random(l.shape) ** (-1.0 / (self.exponent - 1))

    def structural_hypothesis(self):
        return False, "r_nu = 0: no exponential moment, polynomial-bound regime only"

    def _jump_parts(self):
        mass = self.mass_split()[1]
        return [(mass, 3, self.cutoff, self.exponent - 1.0, 0.0, [])]


# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class MeasureSum(_Base):
    """Finite sum of the other families."""

    parts: tuple
    kind = "sum"

    def __post_init__(self):
        flat = []
        for p in self.parts:
            flat.extend(p.parts if isinstance(p, MeasureSum) else [p])
        object.__setattr__(self, "parts", tuple(flat))

    def _sum(self, name, *args, **kw):
        return sum(getattr(p, name)(*args, **kw) for p in self.parts)

    def mass_split(self):
        ms = [p.mass_split() for p in self.parts]
        return float(sum(m[0] for m in ms)), float(sum(m[1] for m in ms))

    def small_mean(self):
        return self._sum("small_mean")

    def big_mean(self):
        return self._sum("big_mean")

    def second_moment(self):
        return self._sum("second_moment")

    def comp_integral(self, q, order: int = 0):
        return self._sum("comp_integral", q, order)

    def pos_divdiff(self, u, v, order: int = 0):
        return self._sum("pos_divdiff", u, v, order)

    def r_nu(self):
        return min(p.r_nu() for p in self.parts)

    def r_nu_star(self):
        return min(p.r_nu_star() for p in self.parts)

    def extension_abscissa(self):
        return min(p.extension_abscissa() for p in self.parts)

    def poles(self):
        order: dict[complex, int] = {}
        for p in self.parts:
            for z, o in p.poles():
                order[z] = max(order.get(z, 0), o)
        return sorted(order.items(), key=lambda t: -t[0].real)

    def moment_order(self):
        return min(p.moment_order() for p in self.parts)

    def tail_pos(self, l):
        return self._sum("tail_pos", l)

    def tail_pos_tilted(self, l, s):
        l = np.asarray(l, dtype=float)
        return sum(np.broadcast_to(p.tail_pos_tilted(l, s), l.shape) for p in self.parts)

    def density(self, y):
        return self._sum("density", y)

    def sample_above(self, l, rng):
        l = np.asarray(l, dtype=float)
        tails = np.stack([np.broadcast_to(p.tail_pos(l), l.shape) for p in self.parts])
        cw = np.cumsum(tails, axis=0)
        u = rng.random(l.shape) * cw[-1]
        comp = (u[None] > cw).sum(axis=0)
        out = np.empty(l.shape)
        for i, p in enumerate(self.parts):
            sel = comp == i
            if np.any(sel):
                out[sel] = p.sample_above(l[sel], rng)
        return out

    def negative_nodes(self, qmax=0.0):
        ys, ws = zip(*(p.negative_nodes(qmax) for p in self.parts))
        return np.concatenate(ys), np.concatenate(ws)

    def neg_support_lower(self):
        return min(p.neg_support_lower() for p in self.parts)

    def truncate_below(self, k):
        return MeasureSum(tuple(p.truncate_below(k) for p in self.parts))

    def components(self):
        return list(self.parts)

    def structural_hypothesis(self):
        res = [p.structural_hypothesis() for p in self.parts]
        ok = all(r[0] for r in res)
        return ok, "; ".join(f"{p.kind}: {r[1]}" for p, r in zip(self.parts, res))

    def _jump_parts(self):
        out = []
        for p in self.parts:
            out.extend(p._jump_parts())
        return out


NO_JUMPS = Atoms(())


def measure_sum(parts: Sequence) -> _Base:
    """Build a sum, collapsing the single-part case."""
    parts = [p for p in parts if p.total_mass() > 0 or not isinstance(p, Atoms)]
    if not parts:
        return NO_JUMPS
    return parts[0] if len(parts) == 1 else MeasureSum(tuple(parts))
