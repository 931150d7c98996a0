"""Exception types shared across the package."""


class ExprayError(Exception):
    """Base class for all package-specific errors."""


class AddressSyntaxError(ExprayError):
    """Raised when an address string does not match the grammar.

    Carries the character position of the offending token.
    """

    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class AddressStructureError(ExprayError):
    """Raised when address components violate a structural invariant."""


class UndecidedComparison(ExprayError):
    """An order query on generator-backed addresses hit the depth cap.

    ``index`` is the first entry index that could not be resolved.
    """

    def __init__(self, index, message=None):
        super().__init__(message or f"comparison undecided at entry index {index}")
        self.index = index


class DepthCapExhausted(ExprayError):
    """A generator-backed address ran out of entries before a query resolved."""


class NotExponentiallyBounded(ExprayError):
    """An operation requiring finite growth bounds got an unbounded address."""


class RayNumericsError(ExprayError):
    """Base class for numerical failures while tracing rays."""


class SingularValueCollision(RayNumericsError):
    """A pullback step came within the configured floor of the singular value.

    Signals that the requested potential sits at or below the lower end of
    the ray's parametrisation.  ``t`` is the potential that failed.
    """

    def __init__(self, t, distance):
        super().__init__(
            f"pullback within {distance:.3e} of the singular value at t={t:.6g}"
        )
        self.t = t
        self.distance = distance


class SeedOverflow(RayNumericsError):
    """The backward-iteration seed exceeded the float range; reject t/eps."""

    def __init__(self, t, message=None):
        super().__init__(message or f"seed overflows float range at t={t:.6g}")
        self.t = t


class StageSearchError(ExprayError):
    """A certificate stage could not be completed; carries partial data."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class PreconditionError(ExprayError):
    """An operation's documented precondition was violated."""
