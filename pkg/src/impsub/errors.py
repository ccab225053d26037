"""Exception types raised across the toolkit."""


class ImpsubError(Exception):
    """Base class for all toolkit errors."""


class SchemaError(ImpsubError):
    """CSV or JSON document does not match the expected layout."""


class GapError(ImpsubError):
    """Timestamps are not contiguous hourly steps."""


class RangeError(ImpsubError):
    """A value lies outside its admissible range."""


class ShapeError(ImpsubError):
    """Series length is incompatible with the requested blocking."""


class EmptySelection(ImpsubError):
    pass


class BadK(ImpsubError):
    pass


class ClusterError(ImpsubError):
    pass


class EmptySample(ImpsubError):
    pass


class ConfigError(ImpsubError):
    pass


class NotOptimal(ImpsubError):
    """A solve did not reach optimality; ``status`` carries the reason."""

    def __init__(self, status, message=None):
        self.status = status
        super().__init__(message or f"solver status: {status}")


class IntegrityError(ImpsubError):
    """Extracted solution violates Design or Operation invariants."""


class LengthMismatch(ImpsubError):
    pass


class BadCount(ImpsubError):
    pass


class ZeroCost(ImpsubError):
    pass
