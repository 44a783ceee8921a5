"""Exception types shared across the package."""


class DrivenOATError(Exception):
    pass


class ConfigError(DrivenOATError, ValueError):
    """Invalid scenario configuration (CLI exit code 1)."""


class NumericalInvariantError(DrivenOATError, ArithmeticError):
    """A numerical invariant was violated (CLI exit code 2)."""


class NotHermitian(NumericalInvariantError):
    pass


class PositivityViolation(NumericalInvariantError):
    def __init__(self, message: str, worst: float | None = None):
        super().__init__(message)
        self.worst = worst


class TruncationInsufficient(NumericalInvariantError):
    pass


class BasisMismatch(DrivenOATError, ValueError):
    pass


class DimensionMismatch(BasisMismatch):
    pass


class BasisOrderViolation(BasisMismatch):
    pass


class ConfigurationViolation(DrivenOATError, ValueError):
    pass


class ResolutionTooLow(DrivenOATError, ValueError):
    pass
