"""Lévy triple and its Laplace exponent.

The process is X_t = B_t - c t + J_t with a standard Brownian part, and

    φ(q) = q²/2 + c q + ∫ (e^{-qy} - 1 + q y 1_{|y|<1}) ν(dy),

so that E[e^{-q X_t}] = e^{t φ(q)} wherever the right side is finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, PoleHit
from .measures import NO_JUMPS, _Base

POLE_TOL = 1e-12


@dataclass(frozen=True)
class MeromorphicInfo:
    """Abscissa of the meromorphic extension and its poles."""

    B_nu: float
    poles: tuple[tuple[complex, int], ...] = ()


@dataclass(frozen=True)
class ProcessSpec:
    """Drift, jump measure and a free-text label.

    Parameters
    ----------
    drift : float
        The constant ``c`` in ``X_t = B_t - c t + J_t``.
    measure : JumpMeasure
        One of the families in :mod:`levy_passage.measures`.
    label : str
        Name used in reports.
    """

    drift: float
    measure: _Base = field(default=NO_JUMPS)
    label: str = ""

    @property
    def meromorphic(self) -> MeromorphicInfo:
        return MeromorphicInfo(self.measure.extension_abscissa(), tuple(self.measure.poles()))

    @property
    def r_nu(self) -> float:
        return self.measure.r_nu()

    @property
    def r_nu_star(self) -> float:
        return self.measure.r_nu_star()

    @property
    def spectrally_positive(self) -> bool:
        return self.measure.spectrally_positive

    @property
    def effective_drift(self) -> float:
        """Drift of the Brownian part once the compensator is moved out.

        Between jumps the path moves as ``B_t + m t`` with
        ``m = -c - ∫_{|y|<1} y ν(dy)``.
        """
        return -self.drift - self.measure.small_mean()


def _check_domain(spec: ProcessSpec, q: np.ndarray) -> None:
    info = spec.meromorphic
    for z, _ in info.poles:
        if np.any(np.abs(q - z) <= POLE_TOL * max(1.0, abs(z))):
            raise PoleHit(f"q hits the pole at {z}")
    if not info.poles:
        lo = -spec.r_nu
        if np.any(q.real < lo) or (spec.r_nu == 0 and np.any(q.real < 0)):
            raise DomainError(f"Re q below the abscissa {lo}")
        if np.any(q.real > spec.r_nu_star):
            raise DomainError(f"Re q above the abscissa {spec.r_nu_star}")


def eval_phi(spec: ProcessSpec, q):
    """Evaluate φ at complex ``q`` (scalar or array).

    Raises
    ------
    PoleHit
        ``q`` sits on a declared pole of the extension.
    DomainError
        ``q`` lies outside the half-plane of definition.
    """
    qa = np.atleast_1d(np.asarray(q, dtype=complex))
    _check_domain(spec, qa)
    out = qa**2 / 2 + spec.drift * qa + spec.measure.comp_integral(qa, 0)
    return out[0] if np.ndim(q) == 0 else out.reshape(np.shape(q))


def eval_phi_derivative(spec: ProcessSpec, q, order: int = 1):
    """Analytic derivative of φ of the given order (any integer >= 1)."""
    if order < 1:
        raise ValueError("order must be >= 1")
    qa = np.atleast_1d(np.asarray(q, dtype=complex))
    _check_domain(spec, qa)
    jump = spec.measure.comp_integral(qa, order)
    if order == 1:
        out = qa + spec.drift + jump
    elif order == 2:
        out = 1.0 + jump
    else:
        out = jump
    return out[0] if np.ndim(q) == 0 else out.reshape(np.shape(q))


def mean_x1(spec: ProcessSpec) -> float:
    """E(X_1) = -φ'(0)."""
    return float(-eval_phi_derivative(spec, 0.0, 1).real)


def mean_x1_direct(spec: ProcessSpec) -> float:
    """E(X_1) from the triplet, ``-c + ∫_{|y|≥1} y ν(dy)``."""
    return -spec.drift + spec.measure.big_mean()


def phi_second_at_zero(spec: ProcessSpec) -> float:
    """φ''(0) = 1 + ∫ y² ν(dy)."""
    return 1.0 + spec.measure.second_moment()


@dataclass(frozen=True)
class HypothesisReport:
    satisfied: bool
    family: str
    reason: str
    B: float
    B_nu: float
    r_nu: float
    r_nu_star: float
    poles: tuple[tuple[complex, int], ...]
    obligation: str

    def to_dict(self) -> dict:
        return {
            "satisfied": self.satisfied,
            "family": self.family,
            "reason": self.reason,
            "B": self.B,
            "B_nu": _json_num(self.B_nu),
            "r_nu": _json_num(self.r_nu),
            "r_nu_star": _json_num(self.r_nu_star),
            "poles": [[z.real, z.imag, o] for z, o in self.poles],
            "obligation": self.obligation,
        }


def _json_num(v: float):
    return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")


def validate_hypotheses(spec: ProcessSpec, B: float = 1.0) -> HypothesisReport:
    """Structural check of the growth condition on the jump transform.

    The constants of the growth bound are not computed; each family carries
    its own argument, recorded in ``obligation``.
    """
    ok, reason = spec.measure.structural_hypothesis()
    info = spec.meromorphic
    if ok and spec.r_nu <= 0:
        ok, reason = False, "r_nu = 0"
    if ok and B >= info.B_nu:
        ok, reason = False, f"B={B} not below B_nu={info.B_nu}"
    return HypothesisReport(
        satisfied=bool(ok),
        family=spec.measure.kind,
        reason=reason,
        B=float(B),
        B_nu=info.B_nu,
        r_nu=spec.r_nu,
        r_nu_star=spec.r_nu_star,
        poles=info.poles,
        obligation="family-level proof; growth constants not evaluated",
    )
