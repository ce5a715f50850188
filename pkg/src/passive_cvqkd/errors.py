"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A parameter is outside its documented range."""


class PhysicalityError(ArithmeticError):
    """A covariance-matrix quantity violates physicality beyond tolerance."""


class RecordFormatError(ValueError):
    """A data file could not be parsed; carries the offending line numbers."""

    def __init__(self, message: str, lines: list[int] | None = None):
        super().__init__(message)
        self.lines = lines or []


class DegenerateDataError(ValueError):
    """A statistic is undefined for the given data (singular or degenerate)."""


class UnitError(ValueError):
    """Records are in the wrong or mismatched units for the requested operation."""


class TrackingDisabledError(RuntimeError):
    """A simulation-only ground-truth quantity was requested but not tracked."""
