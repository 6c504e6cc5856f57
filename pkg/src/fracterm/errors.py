"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class FractermError(Exception):
    """Base class for every error raised by the package."""

    code = "FractermError"


class DomainError(FractermError, ValueError):
    """An argument lies outside the supported domain."""

    code = "DomainError"


class AccuracyError(FractermError, ArithmeticError):
    """A value could not be certified to the requested tolerance.

    The best available estimate and its error bound are attached.
    """

    code = "AccuracyError"

    def __init__(self, message: str, value: float = float("nan"), error: float = float("inf")):
        super().__init__(message)
        self.value = value
        self.error = error


class AliasError(FractermError, ValueError):
    """Collocation grid too coarse to represent products without aliasing."""

    code = "AliasError"


class TerminalTimeInadmissible(FractermError, ValueError):
    """A terminal denominator E_{a,1}(-lambda_j T^a) is too close to zero."""

    code = "TerminalTimeInadmissible"

    def __init__(self, j: int, value: float, eps_den: float):
        super().__init__(
            f"mode j={j}: |E(-lambda_j T^alpha)| = {abs(value):.3e} <= eps_den = {eps_den:.1e}"
        )
        self.j = j
        self.value = value
        self.eps_den = eps_den


class GridError(FractermError, ValueError):
    """Invalid time grid request."""

    code = "GridError"


class NonConvergence(FractermError, RuntimeError):
    """Fixed-point iteration did not reach tolerance.

    ``trajectory`` holds the last iterate so callers can inspect it.
    """

    code = "NonConvergence"

    def __init__(self, message: str, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class HypothesisError(DomainError):
    """A theorem hypothesis is not met; ``constraint`` names it."""

    code = "HypothesisError"

    def __init__(self, constraint: str, detail: str = ""):
        super().__init__(f"hypothesis violated: {constraint}" + (f" ({detail})" if detail else ""))
        self.constraint = constraint


class DegenerateWindow(FractermError, ValueError):
    """Regression window has too few usable points."""

    code = "DegenerateWindow"


class ConfigError(FractermError, ValueError):
    """Malformed experiment configuration; ``field`` names the culprit."""

    code = "ConfigError"

    def __init__(self, field: str, detail: str):
        super().__init__(f"{field}: {detail}")
        self.field = field


class RadiusExceeded(UserWarning):
    """Iterates left the certified ball; the run may still converge."""
