"""Equilibrium consumption strategies under non-exponential discounting."""

from .discount import (
    DiscountSpec,
    Exponential,
    GeneralizedHyperbolic,
    Mixture,
    QuasiHyperbolic,
    TruncatedExponential,
)
from .environment import AffineCapital, CobbDouglas, MarketPath, PiecewiseConstant, Tabulated
from .errors import (
    ConvergenceError,
    DiagnosticError,
    DivergenceError,
    DomainError,
    KinkError,
    NoEquilibriumError,
    TimeConsistentError,
    WindowViolation,
)
from .propensity import PropensityResult, lambda_constant, lambda_specialized
from .recursion import PropensityPath, solve_recursion
from .steady_state import AlphaOutcome, phi, scan_equilibrium_points, solve_alpha
from .utility import UtilitySpec

__all__ = [
    "AffineCapital",
    "AlphaOutcome",
    "CobbDouglas",
    "ConvergenceError",
    "DiagnosticError",
    "DiscountSpec",
    "DivergenceError",
    "DomainError",
    "Exponential",
    "GeneralizedHyperbolic",
    "KinkError",
    "MarketPath",
    "Mixture",
    "NoEquilibriumError",
    "PiecewiseConstant",
    "PropensityPath",
    "PropensityResult",
    "QuasiHyperbolic",
    "Tabulated",
    "TimeConsistentError",
    "TruncatedExponential",
    "UtilitySpec",
    "WindowViolation",
    "lambda_constant",
    "lambda_specialized",
    "phi",
    "scan_equilibrium_points",
    "solve_alpha",
    "solve_recursion",
]
