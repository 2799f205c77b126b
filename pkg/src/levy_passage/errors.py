"""Exception hierarchy shared by all modules."""


class LevyPassageError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(LevyPassageError):
    """Malformed process-spec configuration (carries line/field context)."""

    def __init__(self, message, *, line=None, field=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)
        self.line = line
        self.field = field


class DomainError(LevyPassageError):
    """Argument outside the half-plane where the exponent is defined."""


class PoleHit(DomainError):
    """Argument coincides with a pole of the meromorphic extension."""


class HypothesisUnverified(LevyPassageError):
    """The measure family does not satisfy the growth condition near i*infinity."""


class NoNegativeZero(LevyPassageError):
    """phi - theta has no zero in (-r_nu, 0]."""


class ContourThroughZero(LevyPassageError):
    """A contour edge passes (numerically) through a zero or pole."""


class Inconclusive(LevyPassageError):
    """Multiplicity could not be decided up to the maximal order."""


class MultiplicityMismatch(LevyPassageError):
    """A residue formula was applied at a zero of the wrong multiplicity."""


class ContourContamination(LevyPassageError):
    """Another singularity lies inside a Cauchy circle."""


class NumericalError(LevyPassageError):
    """Base class for numerical non-convergence."""


class GridTooCoarse(NumericalError):
    """FGrid step too large for the negative-jump support."""


class NeedsFGrid(LevyPassageError):
    """Two-sided spec evaluated without an FGrid for the R operator."""


class SlowDecay(NumericalError):
    """Bromwich integrand tail failed to converge."""


class NoConvergence(NumericalError):
    """Fixed-point iteration did not converge."""


class WrongRegime(LevyPassageError):
    """Operation called outside the mean-sign regime it is defined for."""


class ZeroMean(WrongRegime):
    """Gaussian limit requested for a zero-mean process."""


class RegimeError(WrongRegime):
    """Polynomial bound requested with E(X_1) >= 0."""


class TwoSidedUnsupported(LevyPassageError):
    """Closed-form law only available for spectrally positive specs."""


class TooFewHits(LevyPassageError):
    """Not enough hitting paths for an empirical law."""


class ZeroDivision(LevyPassageError, ZeroDivisionError):
    """The transform was evaluated at a zero of phi - theta."""
