"""
Exception hierarchy shared by the engine, the report tools and the CLI
"""


class RHLSError(Exception):
    """Base class for every error raised by the engine."""


class DomainError(RHLSError, ValueError):
    """An argument lies outside the domain of an operation."""


class PoleError(DomainError):
    """A Gamma argument sits on (or within 1e-9 of) a non-positive integer."""

    def __init__(self, message: str, argument: float):
        super().__init__(message)
        self.argument = argument


class SeamError(DomainError):
    """Sampled values and the analytic tail disagree at the truncation radius."""


class SingularPointError(DomainError):
    """A point coincides with the center of a sphere inversion."""


class DivergenceError(RHLSError):
    """An integral does not converge for the given tail exponents."""


class RefinementExhaustedError(RHLSError):
    """Adaptive refinement stopped before reaching the requested tolerance."""

    def __init__(self, message: str, previous: float, last: float):
        super().__init__(message)
        self.previous = previous
        self.last = last


class ConvergenceError(RHLSError):
    """An iteration hit its budget without meeting the residual target."""

    def __init__(self, message: str, history: list[float] | None = None):
        super().__init__(message)
        self.history = list(history or [])
