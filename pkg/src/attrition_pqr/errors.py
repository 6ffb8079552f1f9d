"""Exception types shared across the package."""


class PanelFormatError(ValueError):
    """Raised when an input file violates the panel layout contract."""


class SeparationError(RuntimeError):
    """Raised when a logit fit diverges because the classes are separable."""


class PropensityError(RuntimeError):
    """Raised when first-stage probabilities cannot be built or used."""


class SolverError(RuntimeError):
    """Raised when the quantile LP solver fails.

    ``column`` carries the offending design column index when the failure
    is an unidentified (all-zero weighted) column.
    """

    def __init__(self, message: str, column: int | None = None):
        super().__init__(message)
        self.column = column
