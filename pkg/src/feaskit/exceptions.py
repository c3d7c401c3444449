"""Exception types shared across the package."""


class FeaskitError(Exception):
    """Base class for all feaskit errors."""


class DimensionMismatchError(FeaskitError):
    def __init__(self, expected: int, found: int, what: str = "point"):
        self.expected = expected
        self.found = found
        super().__init__(
            f"dimension mismatch: {what} has dimension {found}, expected {expected}"
        )


class NonFiniteInputError(FeaskitError):
    """Raised when an input vector contains NaN or infinite entries."""


class InvalidSetError(FeaskitError):
    """Raised when a set descriptor violates its construction invariants."""


class InfeasibleWitnessError(FeaskitError):
    """A point claimed to lie in the intersection violates some set."""

    def __init__(self, index: int, residual: float):
        self.index = index
        self.residual = residual
        super().__init__(
            f"point is not in the intersection: set {index} has "
            f"membership residual {residual:.3e}"
        )


class ScheduleValidationError(FeaskitError):
    """A control schedule violates its declared parameters."""


class EngineError(FeaskitError):
    """Raised for invalid run configurations or non-finite iterates."""


class OracleConvergenceError(FeaskitError):
    """Intersection projection did not reach tolerance within the sweep cap.

    Carries the best iterate found and its feasibility residual.
    """

    def __init__(self, message: str, best=None, residual: float | None = None):
        self.best = best
        self.residual = residual
        super().__init__(message)


class OracleError(FeaskitError):
    """Raised when a brute-force oracle cannot produce a reference value."""


class ProblemFileError(FeaskitError):
    """Problem file failed schema or semantic validation.

    ``errors`` is a list of human-readable messages, each naming the
    offending path, what was expected and what was found.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid problem file:\n  " + "\n  ".join(self.errors))
