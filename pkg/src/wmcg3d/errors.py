"""Exception types raised across the package."""


class WMCGError(Exception):
    """Base class for all package errors."""


class InvalidArgument(WMCGError, ValueError):
    pass


class NotInGroup(WMCGError, ValueError):
    """Matrix does not have a strictly positive determinant."""


class DegeneratePivot(WMCGError, ArithmeticError):
    """Shear elimination met a pivot below tolerance.

    ``step`` names the entry that could not be eliminated, e.g. ``"(0,2)"``.
    """

    def __init__(self, step, pivot, tolerance):
        self.step = step
        self.pivot = pivot
        self.tolerance = tolerance
        super().__init__(
            f"degenerate pivot while eliminating entry {step}: "
            f"|pivot|={abs(pivot):.3e} < tolerance {tolerance:.3e}"
        )


class IllConditioned(WMCGError, ArithmeticError):
    pass


class UnsupportedDegree(WMCGError, ValueError):
    pass


class DegenerateKernel(WMCGError, ArithmeticError):
    """A sampled kernel is identically zero and cannot be normalized."""


class LayerContractViolation(WMCGError, ValueError):
    pass


class ConfigError(WMCGError, ValueError):
    """Invalid run configuration; ``key`` names the offending entry."""

    def __init__(self, key, message):
        self.key = key
        self.message = message
        super().__init__(f"{key}: {message}")
