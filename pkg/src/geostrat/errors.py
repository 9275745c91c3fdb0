"""Exception types shared across the package."""


class GeostratError(Exception):
    """Base class for all domain errors."""


class ValidationError(GeostratError):
    """Input violates a documented precondition (bad coordinates, dup ids, ...)."""


class DegeneratePairError(GeostratError):
    """Two records occupy the same location, so distance-based math is undefined."""


class MalformedInputError(GeostratError):
    """A file cannot be parsed. Carries the offending line number when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InsufficientDataError(GeostratError):
    """Too few usable records for the requested statistic."""


class ScenarioError(GeostratError):
    """A scenario mutation is invalid against the current graph."""

    def __init__(self, message, field=None):
        self.field = field
        super().__init__(message)
