"""Exception types raised across the package."""


class InvalidArgumentError(ValueError):
    """An index, shape or parameter is outside its valid domain."""


class SizeGuardError(ValueError):
    """An exhaustive computation would exceed its configured work budget."""


class ImpossibleObservationError(ValueError):
    """A posterior was requested for an observation of probability zero."""


class IterationCapError(RuntimeError):
    """Value iteration did not reach the requested tolerance in time."""
