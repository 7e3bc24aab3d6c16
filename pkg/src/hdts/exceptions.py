"""Exception hierarchy.

Every error subclasses :class:`ValueError` so callers that already guard
numerical input with ``except ValueError`` keep working.
"""


class HdtsError(ValueError):
    """Base class for all errors raised by :mod:`hdts`."""


class NotPositiveDefinite(HdtsError):
    pass


class EmptyDistribution(HdtsError):
    pass


class InvalidBlockSize(HdtsError):
    pass


class LagTooLarge(HdtsError):
    pass


class MissingTarget(HdtsError):
    pass


class InvalidBandwidth(HdtsError):
    pass


class DegenerateVariance(HdtsError):
    pass


class DimensionMismatch(HdtsError):
    pass


class TruncationTooLarge(HdtsError):
    pass


class ConfigError(HdtsError):
    """Invalid experiment configuration; the message names the offending field."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
