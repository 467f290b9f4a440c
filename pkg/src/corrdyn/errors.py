"""Exception and warning types shared across the package."""


class CorrDynError(Exception):
    """Base class for numeric failures raised by corrdyn."""


class ZeroPolynomial(CorrDynError):
    pass


class NonConvergence(CorrDynError):
    """The root finder hit its iteration cap.

    ``partial`` holds the last iterate so callers can inspect it; those
    values are not trustworthy.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class DegenerateResultant(CorrDynError):
    """The eliminated polynomial vanishes identically (shared factor)."""


class DegenerateFiber(CorrDynError):
    """A fiber lost points to infinity (leading coefficient vanished)."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class ImproperGraph(CorrDynError):
    pass


class FitUnstable(CorrDynError):
    pass


class TreeTooLarge(CorrDynError):
    pass


class DiagonalDegenerate(CorrDynError):
    pass


class BranchCollision(CorrDynError):
    """Two candidate roots came too close for nearest-root continuation."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class BadBasePoint(CorrDynError):
    pass


class GuardViolation(CorrDynError):
    """A size guard tripped before an expensive computation started."""


class IllConditionedWarning(UserWarning):
    """Interpolation residual of an elimination exceeded its threshold."""


class DegreeMismatchWarning(UserWarning):
    """A composed graph came out with lower degrees than the product bound."""
