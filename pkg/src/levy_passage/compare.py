"""Three-way reconciliation of F: residue expansion, Bromwich inversion, Monte Carlo."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .asymptotics import ExpansionReport, eval_expansion, expand_F
from .mc.engine import SimConfig, estimate_F, estimate_sup_tail
from .model import ProcessSpec
from .transform import FGrid, invert_bromwich_full, solve_F_grid


@dataclass(frozen=True)
class CompareRow:
    x: float
    F_expansion: float
    F_bromwich: float
    F_mc: float
    se: float
    bias_bound: float
    analytic_ok: bool
    mc_ok: bool

    @property
    def flag(self) -> bool:
        """True when this row has a discrepancy."""
        return not (self.analytic_ok and self.mc_ok)


@dataclass(frozen=True)
class Reconciliation:
    rows: tuple[CompareRow, ...]
    max_analytic_gap: float
    residual_slope: float | None
    expected_slope: float | None
    slope_rtol: float
    expansion: ExpansionReport

    @property
    def analytic_ok(self) -> bool:
        return all(r.analytic_ok for r in self.rows)

    @property
    def mc_ok(self) -> bool:
        return all(r.mc_ok for r in self.rows)

    @property
    def slope_ok(self) -> bool | None:
        if self.residual_slope is None or self.expected_slope is None:
            return None
        return abs(self.residual_slope - self.expected_slope) <= self.slope_rtol * abs(
            self.expected_slope
        )

    @property
    def ok(self) -> bool:
        return self.analytic_ok and self.mc_ok and self.slope_ok is not False

    def to_dict(self) -> dict:
        return {
            "max_analytic_gap": self.max_analytic_gap,
            "analytic_ok": self.analytic_ok,
            "mc_ok": self.mc_ok,
            "residual_slope": self.residual_slope,
            "expected_slope": self.expected_slope,
            "slope_ok": self.slope_ok,
            "ok": self.ok,
        }


def two_sided_grid(spec: ProcessSpec, theta, mu, rho, x_max: float) -> FGrid | None:
    """F-grid needed by the R operator (None for spectrally positive specs)."""
    if spec.spectrally_positive:
        return None
    k_cut = -spec.measure.neg_support_lower()
    h = min(k_cut / 64, 0.05)
    return solve_F_grid(spec, theta, mu, rho, max(x_max, k_cut) + h, h)


def residual_slope(spec, report: ExpansionReport, xs, F_brom) -> tuple[float | None, float | None]:
    """Fitted log-slope of (F − C₀e^{−γ₀x})e^{γ₀x} and the slope −(Re γ₁ − γ₀)."""
    if not report.terms:
        return None, None
    g1 = min(t.gamma.real for t in report.terms)
    xs = np.asarray(xs, dtype=float)
    r = (np.asarray(F_brom) - report.C0 * np.exp(-report.gamma0 * xs)) * np.exp(report.gamma0 * xs)
    r = np.abs(r)
    good = r > 0
    if good.sum() < 2:
        return None, -(g1 - report.gamma0)
    slope = float(np.polyfit(xs[good], np.log(r[good]), 1)[0])
    return slope, float(-(g1 - report.gamma0))


def reconcile(
    spec: ProcessSpec,
    xs: Sequence[float],
    theta: float = 0.0,
    mu: float = 0.0,
    rho: float = 0.0,
    n_paths: int = 1_000_000,
    seed: int = 0,
    analytic_tol: float = 1e-3,
    n_se: float = 3.0,
    slope_rtol: float = 0.2,
    threads: int | None = None,
    backend: str | None = None,
) -> Reconciliation:
    xs = [float(v) for v in xs]
    grid = two_sided_grid(spec, theta, mu, rho, max(xs))
    rep = expand_F(spec, theta, mu, rho, grid=grid)
    F_exp = np.atleast_1d(eval_expansion(rep, xs))
    F_br = np.array([invert_bromwich_full(spec, theta, mu, rho, x, grid=grid).raw for x in xs])
    if theta == 0 and mu == 0 and rho == 0:
        tail = estimate_sup_tail(spec, xs, n_paths=n_paths, seed=seed, threads=threads, backend=backend)
        mc = tail.p
        se = tail.se
        bias = tail.bias_bound if tail.bounded else np.zeros(len(xs))
    else:
        mc, se, bias = [], [], []
        for i, x in enumerate(xs):
            cfg = SimConfig(n_paths=n_paths, x=x, seed=seed + i, threads=threads, backend=backend)
            e = estimate_F(spec, theta, mu, rho, x, cfg)
            mc.append(e.estimate)
            se.append(e.std_error)
            bias.append(e.bias_bound)
    rows = []
    for i, x in enumerate(xs):
        a_ok = abs(F_exp[i] - F_br[i]) <= analytic_tol
        # censoring and killing only lower the MC estimate
        lo = F_br[i] - n_se * se[i] - bias[i]
        hi = F_br[i] + n_se * se[i]
        m_ok = lo <= mc[i] <= hi
        rows.append(
            CompareRow(x, float(F_exp[i]), float(F_br[i]), float(mc[i]), float(se[i]),
                       float(bias[i]), bool(a_ok), bool(m_ok))
        )
    gap = float(np.max(np.abs(F_exp - F_br)))
    s, e = residual_slope(spec, rep, xs, F_br)
    return Reconciliation(tuple(rows), gap, s, e, slope_rtol, rep)
