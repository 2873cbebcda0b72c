"""Exception types raised across the package."""


class OverlapError(Exception):
    """Base class for all package errors."""


class NonPositiveRate(OverlapError, ValueError):
    pass


class NonFinite(OverlapError, ValueError):
    pass


class UnclassifiableGeometry(OverlapError, ValueError):
    """Index pattern falls on a boundary not covered by the nine orderings."""


class InternalInconsistency(OverlapError, ArithmeticError):
    """A derived probability left [0, 1] beyond rounding slack."""


class FormulaUnderReview(OverlapError):
    """Strict mode refused a closed form listed in the discrepancy ledger."""


class UnsupportedVariant(OverlapError, ValueError):
    pass


class UnsupportedEvent(OverlapError, ValueError):
    pass


class QuadratureNonConvergence(OverlapError, ArithmeticError):
    pass


class IndexOutOfRange(OverlapError, IndexError):
    pass


class DiscrepancyWarning(UserWarning):
    """Closed form and published table value disagree."""


class IOFailure(OverlapError, OSError):
    """A report could not be written."""
