"""Constant propensity to consume out of total wealth, constant interest rate.

A constant equilibrium propensity λ solves

    1 = λ · J((1 - γ)(λ - r)),     J(a) = ∫_0^∞ h(t) e^{-a t} dt,

subject to J converging. :func:`lambda_constant` solves this for any
discount family; the ``lambda_<family>`` functions solve the family-specific
forms of the same equation without going through ``J`` and serve as
independent cross-checks.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy.integrate import IntegrationWarning
from scipy.optimize import brentq

from .discount import DiscountSpec, Exponential, GeneralizedHyperbolic, Mixture, QuasiHyperbolic
from .errors import DiagnosticError, DivergenceError, DomainError, NoEquilibriumError

KNIFE_EDGE_TOL = 1e-12
SCAN_POINTS = 256
UNBOUNDED_CAP = 1e8
_XTOL = 1e-16
_RTOL = 4 * np.finfo(float).eps


@dataclass(frozen=True)
class PropensityResult:
    lam: float
    integrability_margin: float
    method: str
    note: str = ""
    n_roots: int = 1
    lambda_under: float | None = None
    lambda_over: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "integrability_margin", float(self.integrability_margin))
        if not self.lam > 0:
            raise NoEquilibriumError(f"propensity: lambda must be > 0, got {self.lam}")
        if not self.integrability_margin > 0:
            raise NoEquilibriumError(
                f"propensity: integrability margin must be > 0, got {self.integrability_margin}"
            )

    def to_dict(self):
        out = {
            "lambda": self.lam,
            "margin": self.integrability_margin,
            "method": self.method,
        }
        if self.note:
            out["note"] = self.note
        if self.n_roots != 1:
            out["n_roots"] = self.n_roots
        if self.lambda_under is not None:
            out["lambda_under"] = self.lambda_under
            out["lambda_over"] = self.lambda_over
        return out


def scan_grid(lo, hi, n=SCAN_POINTS):
    """Points in (lo, hi), log-clustered towards both ends (hi may be inf)."""
    if math.isinf(hi):
        start = max(lo, 1e-12) if lo == 0 else lo
        offsets = np.logspace(-12, 4, n) * max(abs(start), 1e-3)
        return start + offsets if lo > 0 else offsets
    span = hi - lo
    half = n // 2
    fr = np.logspace(math.log10(8 * np.finfo(float).eps), math.log10(0.5), half)
    pts = np.concatenate([lo + span * fr, (hi - span * fr)[::-1]])
    return np.unique(pts[(pts > lo) & (pts < hi)])


def sign_change_brackets(fun, pts):
    """Brackets (a, b) holding a root; an exact zero at a grid point gives (p, p)."""
    vals = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        for p in pts:
            try:
                v = fun(p)
            except (DivergenceError, OverflowError, ZeroDivisionError):
                v = math.nan
            vals.append(v)
    vals = np.asarray(vals)
    changes = []
    for j in range(len(pts)):
        a = vals[j]
        if a == 0:
            changes.append((pts[j], pts[j]))
        elif j + 1 < len(pts) and np.isfinite(a) and np.isfinite(vals[j + 1]) and np.sign(a) * np.sign(vals[j + 1]) < 0:
            changes.append((pts[j], pts[j + 1]))
    return changes


def _solve_scanned(fun, lo, hi, what, closed_top=False):
    pts = scan_grid(lo, hi)
    if closed_top:
        pts = np.append(pts, hi)
    changes = sign_change_brackets(fun, pts)
    top = pts[-1]
    # an unbounded bracket is searched outwards up to UNBOUNDED_CAP times the last point
    while not changes and math.isinf(hi) and top < UNBOUNDED_CAP * pts[-1]:
        ext = np.geomspace(top, 100.0 * top, 64)
        changes = sign_change_brackets(fun, ext)
        top = ext[-1]
    if not changes:
        raise NoEquilibriumError(f"propensity: no equilibrium propensity: {what} has no sign change")
    a, b = changes[0]
    root = a if a == b else brentq(fun, a, b, xtol=_XTOL, rtol=_RTOL, maxiter=500)
    return root, len(changes)


def _margin(h: DiscountSpec, lam, r, gamma):
    floor = h.decay_floor
    return math.inf if math.isinf(floor) else floor + (1 - gamma) * (lam - r)


def lambda_constant(h: DiscountSpec, r: float, gamma: float) -> PropensityResult:
    """Solve 1 = λ J((1-γ)(λ-r)) for any discount family."""
    if not r > 0:
        raise DomainError(f"propensity: r must be > 0, got {r}")
    if not gamma > 0:
        raise DomainError(f"propensity: gamma must be > 0, got {gamma}")
    mass = h.total_mass()
    if gamma == 1:
        lam = 1.0 / mass
        return PropensityResult(lam, _margin(h, lam, r, gamma), "closed_form")
    if abs(r * mass - 1.0) < KNIFE_EDGE_TOL:
        return PropensityResult(r, _margin(h, r, r, gamma), "closed_form", note="knife-edge r = 1/∫h")

    floor = h.decay_floor
    if gamma > 1:
        lo, hi = 0.0, r + floor / (gamma - 1)
    else:
        lo, hi = max(0.0, r - floor / (1 - gamma)), math.inf
    # families whose integral is finite at the decay floor can have a root
    # closer to hi than floating point resolves; scan hi itself for them
    closed_top = math.isfinite(hi) and h.converges(-floor)

    def residual(lam):
        a = -floor if closed_top and lam >= hi else (1 - gamma) * (lam - r)
        return 1.0 - lam * h.weighted_integral(a)

    lam, n = _solve_scanned(residual, lo, hi, "1 - λJ((1-γ)(λ-r))", closed_top)
    notes = []
    proved = gamma > 1 or isinstance(h, (Exponential, QuasiHyperbolic))
    if not proved:
        notes.append("uniqueness unproved for this family with gamma < 1")
    if n > 1:
        notes.append(f"{n} sign changes found; smallest admissible root returned")
    return PropensityResult(lam, _margin(h, lam, r, gamma), "root_find", "; ".join(notes), n)


def lambda_exponential(rho, r, gamma) -> PropensityResult:
    """λ0 = r + (ρ - r)/γ, valid when ρ - r(1 - γ) > 0."""
    if rho - r * (1 - gamma) <= 0:
        raise NoEquilibriumError(
            f"propensity: λ₀ ≤ 0 (rho - r(1-gamma) = {rho - r * (1 - gamma)!r})"
        )
    lam = r + (rho - r) / gamma
    return PropensityResult(lam, rho + (1 - gamma) * (lam - r), "closed_form")


def lambda_mixture(omega, rho1, rho2, r, gamma) -> PropensityResult:
    """Root of ω/(ρ1+(λ-r)(1-γ)) + (1-ω)/(ρ2+(λ-r)(1-γ)) - 1/λ for γ > 1."""
    if not gamma > 1:
        raise DomainError(f"propensity: lambda_mixture requires gamma > 1, got {gamma}")
    if not 0 < omega < 1 or not 0 < rho1 < rho2:
        raise DomainError("propensity: lambda_mixture needs 0 < omega < 1 and 0 < rho1 < rho2")

    def f(lam):
        d = (lam - r) * (1 - gamma)
        return omega / (rho1 + d) + (1 - omega) / (rho2 + d) - 1.0 / lam

    hi = r + rho1 / (gamma - 1)
    eps = 1e-14 * hi
    lam = brentq(f, eps, hi - eps, xtol=_XTOL, rtol=_RTOL, maxiter=500)
    rho0 = omega * rho1 + (1 - omega) * rho2
    under = r + (rho1 - r) / gamma
    over = r + (rho0 - r) / gamma
    if not under < lam:
        raise DiagnosticError(f"propensity: expected lambda_under={under} < lambda_1={lam}")
    return PropensityResult(
        lam, rho1 + (lam - r) * (1 - gamma), "root_find", lambda_under=under, lambda_over=over
    )


def lambda_quasi_hyperbolic(rho, tau, delta, r, gamma) -> PropensityResult:
    """Root of γ - (1-δ)exp(-(ρ̃+λ(1-γ))τ) - ρ̃/λ with ρ̃ = ρ - r(1-γ)."""
    rt = rho - r * (1 - gamma)
    if not rt > 0:
        raise NoEquilibriumError(f"propensity: rho - r(1-gamma) = {rt} must be > 0")
    if gamma == 1:
        lam = rho / (1 - (1 - delta) * math.exp(-rho * tau))
        return PropensityResult(lam, rho, "closed_form")
    if delta == 1:
        lam = rt / gamma
        return PropensityResult(lam, rt + lam * (1 - gamma), "closed_form")

    def f(lam):
        return gamma - (1 - delta) * math.exp(-(rt + lam * (1 - gamma)) * tau) - rt / lam

    if gamma < 1:
        hi = rt / gamma
        while f(hi) <= 0:
            hi *= 2
        lam = brentq(f, 1e-14 * hi, hi, xtol=_XTOL, rtol=_RTOL, maxiter=500)
        n = 1
    else:
        lam, n = _solve_scanned(f, 0.0, rt / (gamma - 1), "quasi-hyperbolic f(λ)")
    note = f"{n} sign changes found; smallest admissible root returned" if n > 1 else ""
    return PropensityResult(lam, rt + lam * (1 - gamma), "root_find", note, n)


def _power_exponential_integral(a, p, c):
    """∫_0^∞ (1 + a s)^{-p} e^{-c s} ds via the generalised exponential integral E_p."""
    with mpmath.workdps(30):
        if c <= 0:
            # only reached at the bracket end, where rounding can push c below 0
            if not p > 1:
                return math.inf
            return float(1 / (mpmath.mpf(a) * (mpmath.mpf(p) - 1)))
        x = mpmath.mpf(c) / a
        return float(mpmath.exp(x) * mpmath.expint(p, x) / a)


def lambda_hyperbolic(a, b, rho, r, gamma) -> PropensityResult:
    """Root of ∫(1+as)^{-b/a} e^{-(ρ+(λ-r)(1-γ))s} ds - 1/λ on (0, r + ρ/(γ-1))."""
    if not gamma > 1:
        raise DomainError(f"propensity: lambda_hyperbolic requires gamma > 1, got {gamma}")
    if not (a > 0 and b > 0 and rho > 0):
        raise DomainError("propensity: lambda_hyperbolic needs a, b, rho > 0")
    p = b / a

    def f(lam):
        return _power_exponential_integral(a, p, rho + (lam - r) * (1 - gamma)) - 1.0 / lam

    hi = r + rho / (gamma - 1)
    eps = 1e-13 * hi
    top = hi if p > 1 else hi - eps
    if f(top) < 0:
        raise NoEquilibriumError(
            "propensity: no equilibrium propensity: f stays negative up to r + rho/(gamma-1)"
        )
    lam = brentq(f, eps, top, xtol=_XTOL, rtol=_RTOL, maxiter=500)
    return PropensityResult(lam, rho + (lam - r) * (1 - gamma), "root_find")


def lambda_specialized(h: DiscountSpec, r, gamma) -> PropensityResult:
    """Dispatch to the family-specific route."""
    if isinstance(h, Exponential):
        return lambda_exponential(h.rho, r, gamma)
    if isinstance(h, Mixture):
        return lambda_mixture(h.omega, h.rho1, h.rho2, r, gamma)
    if isinstance(h, QuasiHyperbolic):
        return lambda_quasi_hyperbolic(h.rho, h.tau, h.delta, r, gamma)
    if isinstance(h, GeneralizedHyperbolic):
        return lambda_hyperbolic(h.a, h.b, h.rho, r, gamma)
    raise DomainError(f"propensity: no specialized route for {h.family}")
