"""Exception hierarchy shared by every solver module."""


class TimeConsistentError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(TimeConsistentError, ValueError):
    """An argument lies outside the domain of the function."""


class KinkError(DomainError):
    """A pointwise derivative was requested exactly at a jump of the discount function."""


class DivergenceError(TimeConsistentError, ValueError):
    """An improper integral does not converge for the requested parameters."""


class NoEquilibriumError(TimeConsistentError):
    """The root equation defining an equilibrium quantity has no admissible solution."""


class ConvergenceError(TimeConsistentError):
    """An iterative solver stopped without meeting its tolerance.

    ``history`` holds the residual of every sweep so callers can report it.
    """

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])

    @property
    def last_residual(self):
        return self.history[-1] if self.history else float("nan")


class WindowViolation(TimeConsistentError):
    """A capital trajectory left the computational window."""


class DiagnosticError(TimeConsistentError):
    """Two routes to the same quantity disagree beyond tolerance."""
