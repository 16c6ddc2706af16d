"""Exception hierarchy shared by the library and the CLI."""


class SFHError(Exception):
    """Base class for all errors raised by sfh."""


class InvalidBodyError(SFHError, ValueError):
    """Convex body data violates 0 in int(K) or the C^2_+ condition."""


class DomainError(SFHError, ValueError):
    """A point, curve or step left the domain of a graph."""


class NumericalError(SFHError, ArithmeticError):
    """Quadrature, integration or inversion produced an unusable result."""


class NotStationaryError(SFHError, ValueError):
    """An operation that needs an area-stationary graph got a non-stationary one."""


class ConfigError(SFHError, ValueError):
    """Schema violation in a run configuration.

    ``path`` names the offending field, e.g. ``"quadrature.order"``.
    """

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")
