"""Exception hierarchy.

The CLI maps these onto exit codes: ``DocumentError`` -> 2,
``InvariantViolation`` -> 3, ``DimensionMismatch`` -> 4.
"""


class ObsentError(Exception):
    """Base class for all errors raised by this package."""


class InvariantViolation(ObsentError, ValueError):
    """An object failed one of its construction invariants."""


class NonSquare(InvariantViolation):
    pass


class NotHermitian(InvariantViolation):
    pass


class NotPositive(InvariantViolation):
    pass


class NotNormalized(InvariantViolation):
    pass


class WeightError(InvariantViolation):
    pass


class ZeroVolumeOutcome(InvariantViolation):
    pass


class DimensionMismatch(ObsentError, ValueError):
    pass


class LabelMismatch(DimensionMismatch):
    pass


class DomainError(ObsentError, ValueError):
    """A spectral function is undefined on an above-tolerance eigenvalue."""


class ConvergenceFailure(ObsentError):
    pass


class BranchExplosion(ObsentError):
    pass


class SupportLeak(ObsentError):
    pass


class ModelFalsified(ObsentError):
    """Soft evidence assigns weight to an outcome the model deems impossible."""


class SingularNormalizer(ObsentError):
    pass


class DocumentError(ObsentError):
    """Malformed input document; the message carries a file/JSON path."""
