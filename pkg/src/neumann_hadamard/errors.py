"""Exception hierarchy.

Everything numerical derives from :class:`NumericalError` so the CLI can map
it to exit code 1; configuration problems derive from :class:`ConfigError`
(exit code 2).
"""


class HadamardError(Exception):
    """Base class for all errors raised by this package."""


class NumericalError(HadamardError):
    """A computation could not be carried out to the requested accuracy."""


class ConfigError(HadamardError, ValueError):
    """Invalid user input (config file or command line)."""


class ParseError(ConfigError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(ConfigError):
    def __init__(self, field: str, message: str = ""):
        self.field = field
        super().__init__(f"{field}: {message}" if message else field)


# geometry
class NonPositiveRadius(NumericalError, ValueError):
    pass


class OffsetNotStarShaped(NumericalError):
    pass


class FitResidualTooLarge(NumericalError):
    pass


# meshing / fem
class InvalidResolution(NumericalError, ValueError):
    pass


class ResolutionBudgetExceeded(NumericalError):
    pass


class DegenerateTriangle(NumericalError):
    pass


class PointOutsideDomain(NumericalError):
    pass


class SolverNoConvergence(NumericalError):
    def __init__(self, message: str, iterations: int = 0, residuals=None):
        self.iterations = iterations
        self.residuals = residuals
        super().__init__(message)


# perturbation / harness
class AmbiguousCluster(NumericalError):
    pass


class QuadratureUnderResolved(NumericalError):
    pass


class ShellNotResolved(NumericalError):
    pass


class LengthMismatch(NumericalError, ValueError):
    pass


class InsufficientData(NumericalError):
    pass
