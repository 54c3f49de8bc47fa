"""Exception types raised across the package."""


class KdiffError(Exception):
    """Base class for all package errors."""


class InvalidInverse(KdiffError, ZeroDivisionError):
    pass


class FieldExhausted(KdiffError):
    """Every field element was vetoed while building a transmission."""


class OrderingViolated(KdiffError):
    """Next-needed packets are not distinct and ordered by receiver index."""


class ModeUnreachable(KdiffError):
    """A mode never transmits and its leader is never helped by other modes."""


class DegenerateRates(KdiffError):
    """A mode with nonzero time share has a zero delivery rate."""


class ModelBreakdown(KdiffError):
    """Buffer density reached 1, so the rate equation has no finite value."""


class InfeasibleEqualization(KdiffError):
    """The equalisation factor cannot be computed for this iteration."""


class ValidationError(KdiffError, ValueError):
    """Bad configuration. ``path`` names the offending field."""

    def __init__(self, message, path=None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class SimulationError(KdiffError):
    """The compiled simulation loop hit one of its internal limits."""
