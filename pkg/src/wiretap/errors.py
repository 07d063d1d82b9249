"""Exception hierarchy for the wiretap solvers."""


class WiretapError(Exception):
    """Base class for all errors raised by this package."""


class ChannelError(WiretapError, ValueError):
    """Malformed or inconsistent channel matrices."""


class DimensionMismatch(ChannelError):
    pass


class NotPositiveSemidefinite(ChannelError):
    pass


class NotStrictlyDegraded(WiretapError):
    """W1 - W2 is not positive definite at the working tolerance."""


class IllConditioned(WiretapError):
    """W1 is too close to singular to be inverted directly."""


class BelowThreshold(WiretapError):
    """The full-rank closed form is not PSD at the requested power.

    The threshold report is attached so callers can fall back to another
    solver without recomputing it.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NullspaceConditionViolated(WiretapError):
    pass


class ProjectedNotDegraded(WiretapError):
    pass


class SingularW2(WiretapError):
    pass


class ZeroCovariance(WiretapError):
    pass


class ZeroMatrix(WiretapError):
    pass


class ProductNotHermitian(WiretapError):
    pass


class HypothesisViolated(WiretapError):
    pass


class MalformedInput(WiretapError):
    """Input file that does not follow the channel or covariance schema."""
