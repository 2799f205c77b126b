"""Polynomial decay of F under finite polynomial moments.

When ν has a finite moment of order p ≥ 2 and E X₁ < 0, F(x) ≤ C_n/(1 + xⁿ)
with n = ⌊p − 2⌋. The constant is not explicit, so it is fitted from Monte
Carlo with a 3-SE inflation and the fit is checked for growth at the right
end of the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import RegimeError
from .measures import MOMENT_CAP
from .model import ProcessSpec, mean_x1
from .mc.engine import SimConfig, estimate_sup_tail, simulate_coupled
from .zeros import is_zero_mean

OPEN_MARGIN = 0.01  # distance kept from an open moment bound


def moment_order(measure) -> float:
    """Largest usable p with ∫_0^∞ y^p ν(dy) < ∞, capped at 64.

    Families with an open bound (power tails: p < α − 1) report the bound
    minus 0.01.
    """
    sup = float(measure.moment_order())
    if sup >= MOMENT_CAP:
        return MOMENT_CAP
    return sup - OPEN_MARGIN


@dataclass(frozen=True)
class PolyBoundReport:
    p: float
    n: int
    C_n: float
    x: tuple[float, ...]
    F: tuple[float, ...]
    se: tuple[float, ...]
    bias: tuple[float, ...]
    bias_is_bound: bool
    violations: tuple[float, ...]
    n_paths: int

    @property
    def scaled(self) -> np.ndarray:
        """F̂(x)(1 + xⁿ) per grid cell."""
        x = np.asarray(self.x)
        return np.asarray(self.F) * (1 + x**self.n)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "n": self.n,
            "C_n": self.C_n,
            "n_paths": self.n_paths,
            "rows": [
                {"x": a, "F": b, "se": c, "bias_bound": d, "scaled": float(e)}
                for a, b, c, d, e in zip(self.x, self.F, self.se, self.bias, self.scaled)
            ],
            "bias_is_bound": self.bias_is_bound,
            "violations": list(self.violations),
        }


def check_poly_bound(
    spec: ProcessSpec,
    p: float,
    x_grid: Sequence[float],
    config: SimConfig | None = None,
) -> PolyBoundReport:
    """Fit C_n = max_x upper-CI[F̂(x)(1 + xⁿ)] and flag trend growth.

    A cell is a violation when its lower 3-SE bound exceeds C_n, or when it
    is the last grid cell, holds the largest scaled value, and beats every
    other cell's upper bound (the bound is still growing at the right end).

    Raises
    ------
    RegimeError
        E(X₁) ≥ 0.
    ValueError
        ``p`` exceeds the moment order of ν or is below 2.
    """
    if is_zero_mean(spec) or mean_x1(spec) >= 0:
        raise RegimeError("polynomial bound needs E(X_1) < 0")
    if p < 2:
        raise ValueError("p must be >= 2")
    if p > moment_order(spec.measure):
        raise ValueError(f"p = {p} exceeds the moment order {moment_order(spec.measure)}")
    cfg = config or SimConfig()
    n = int(math.floor(p - 2))
    x = np.asarray(sorted(float(v) for v in x_grid))
    tail = estimate_sup_tail(
        spec,
        x,
        n_paths=cfg.n_paths,
        seed=cfg.seed,
        horizon=cfg.horizon,
        kill_depth=cfg.kill_depth,
        threads=cfg.threads,
        backend=cfg.backend,
    )
    scale = 1 + x**n
    bias = tail.bias_bound if tail.bounded else 0.0
    upper = (tail.p + 3 * tail.se + bias) * scale
    lower = (tail.p - 3 * tail.se) * scale
    C = float(upper.max())
    viol = [float(v) for v, lo in zip(x, lower) if lo > C]
    mid = tail.p * scale
    if x.size > 1 and int(np.argmax(mid)) == x.size - 1 and lower[-1] > upper[:-1].max():
        viol.append(float(x[-1]))
    return PolyBoundReport(
        p=float(p),
        n=n,
        C_n=C,
        x=tuple(float(v) for v in x),
        F=tuple(float(v) for v in tail.p),
        se=tuple(float(v) for v in tail.se),
        bias=tuple(float(v) for v in tail.bias_bound),
        bias_is_bound=bool(tail.bounded),
        violations=tuple(sorted(set(viol))),
        n_paths=cfg.n_paths,
    )


def truncate_below(measure, k: float):
    """ν restricted to [−k, ∞); ``k = inf`` is the identity."""
    if not k > 0:
        raise ValueError("truncation level must be positive")
    if math.isinf(k):
        return measure
    return measure.truncate_below(k)


@dataclass(frozen=True)
class TruncationCertificate:
    k: float
    x: tuple[float, ...]
    F: tuple[float, ...]
    F_k: tuple[float, ...]
    se: tuple[float, ...]
    se_k: tuple[float, ...]
    pathwise: bool

    @property
    def ok(self) -> bool:
        """Pathwise ordering plus F̂ ≤ F̂^k + 3 SE on every cell."""
        return self.pathwise and all(
            a <= b + 3 * s for a, b, s in zip(self.F, self.F_k, self.se_k)
        )


def truncation_certificate(
    spec: ProcessSpec, k: float, x_grid: Sequence[float], config: SimConfig | None = None
) -> TruncationCertificate:
    """Coupled Monte Carlo check that truncating negative jumps raises F."""
    cfg = config or SimConfig()
    F, Fk, se, sek = [], [], [], []
    path_ok = True
    for i, x in enumerate(x_grid):
        cs = simulate_coupled(spec, k, replace(cfg, x=float(x), seed=cfg.seed + i))
        n = cs.status.size
        h = cs.hit().astype(float)
        hk = cs.hit_k().astype(float)
        F.append(float(h.mean()))
        Fk.append(float(hk.mean()))
        se.append(float(h.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf)
        sek.append(float(hk.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf)
        path_ok = path_ok and cs.monotone()
    return TruncationCertificate(
        float(k), tuple(float(v) for v in x_grid), tuple(F), tuple(Fk), tuple(se), tuple(sek), path_ok
    )
