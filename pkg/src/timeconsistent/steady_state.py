"""Steady states of the growth model under non-exponential discounting.

At a candidate steady state k̄ with marginal product x = f'(k̄), the curvature
ratio α = V''(k̄)/u''(c̄) must satisfy

    α ∫_0^∞ h(t) e^{(x - α) t} dt = 1,     α >= x > 0.

For exponential discounting the equation is empty at x = ρ and unsolvable
elsewhere; for other discount functions it typically has a solution for a
whole band of x, so the steady state is not pinned down.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .discount import DiscountSpec, TruncatedExponential
from .errors import DomainError, NoEquilibriumError
from .propensity import scan_grid, sign_change_brackets
from .utility import UtilitySpec

SOLVED = "Solved"
NO_SOLUTION = "NoSolution"
DEGENERATE = "Degenerate"

DEGENERACY_TOL = 1e-12
ALPHA_CAP = 1e4


@dataclass(frozen=True)
class AlphaOutcome:
    status: str
    alpha: float = math.nan
    admissible: bool = False
    residual: float = math.nan
    roots: tuple = ()


def _alpha_equation(h: DiscountSpec, x, method):
    def g(alpha):
        return alpha * h.weighted_integral(alpha - x, method=method) - 1.0

    return g


def solve_alpha(h: DiscountSpec, x, method="auto") -> AlphaOutcome:
    """Solve α J(α - x) = 1 on the whole convergence domain α > max(0, x - decay).

    Every root is reported; ``alpha`` is the first root with α >= x if there
    is one, otherwise the first root, and ``admissible`` says whether α >= x.
    """
    if not x > 0:
        raise DomainError(f"steady_state: marginal product x must be > 0, got {x}")
    g = _alpha_equation(h, x, method)
    floor = h.decay_floor
    lo = max(0.0, x - floor) if math.isfinite(floor) else 0.0
    hi = x + 10.0 * float(h.inst_rate(0.0)) + 10.0

    span = hi - lo
    probes = [lo + span * f for f in (0.1, 0.37, 0.81)]
    if all(abs(g(a)) < DEGENERACY_TOL for a in probes):
        return AlphaOutcome(DEGENERATE, admissible=True, residual=max(abs(g(a)) for a in probes))

    roots = []
    brackets = sign_change_brackets(g, scan_grid(lo, hi))
    while not brackets and hi < ALPHA_CAP:
        new_hi = min(2 * hi, ALPHA_CAP)
        brackets = sign_change_brackets(g, np.geomspace(hi, new_hi, 64))
        hi = new_hi
    for a, b in brackets:
        roots.append(a if a == b else brentq(g, a, b, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500))
    if not roots:
        return AlphaOutcome(NO_SOLUTION)
    good = [a for a in roots if a >= x]
    alpha = good[0] if good else roots[0]
    return AlphaOutcome(SOLVED, float(alpha), bool(good), abs(g(alpha)), tuple(float(a) for a in roots))


def alpha_exponential_quadratic(f, k_bar, rho, u: UtilitySpec, tol=1e-8):
    """Curvature ratio at the exponential-discount steady state f'(k̄) = ρ.

    α = f'(k̄) [1 + √(1 + 4 u'(c̄) f''(k̄) / (ρ² u''(c̄)))] / 2 with c̄ = f(k̄),
    the larger root of u''(c̄) α (f'(k̄) - α) = -u'(c̄) f''(k̄).
    """
    fp = float(f.marginal(k_bar))
    if abs(fp - rho) > tol:
        raise DomainError(f"steady_state: not a steady state: f'(k̄) = {fp} differs from rho = {rho}")
    c_bar = float(f.output(k_bar))
    fpp = float(f.curvature(k_bar))
    disc = 1.0 + 4.0 * u.u_prime(c_bar) * fpp / (rho**2 * u.u_double_prime(c_bar))
    if disc < 0:
        raise NoEquilibriumError(f"steady_state: complex roots: discriminant {disc} < 0")
    alpha = fp * (1.0 + math.sqrt(disc)) / 2.0
    if fpp < 0 and not alpha > fp:
        raise NoEquilibriumError(f"steady_state: expected alpha > f'(k̄), got {alpha} <= {fp}")
    return alpha


def phi(x, tol=1e-15, max_iter=400):
    """The root y != x of y e^{-y} = x e^{-x} (y = 1 when x = 1).

    Writing y - ln y - 1 = x - ln x - 1 =: c, the branch y > 1 is solved in
    u = y - 1 (u - log1p(u) = c) and the branch y < 1 in z = ln y
    (expm1(z) - z = c); both forms stay accurate near x = 1.
    """
    if not x > 0:
        raise DomainError(f"steady_state: phi needs x > 0, got {x}")
    if x == 1:
        return 1.0
    v = x - 1.0
    c = v - math.log1p(v) if abs(v) < 0.5 else v - math.log(x)
    if x < 1:
        def gap(u):
            return u - math.log1p(u) - c

        lo, hi = 0.0, c + 2.0 * math.log1p(c) + 2.0
        while gap(hi) < 0:
            hi *= 2
    else:
        def gap(z):
            return c - (math.expm1(z) - z)

        lo, hi = -(c + 2.0), 0.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if gap(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, abs(mid)):
            break
    mid = 0.5 * (lo + hi)
    return 1.0 + mid if x < 1 else math.exp(mid)


def truncated_exponential_steady_state(rho, T, x) -> AlphaOutcome:
    """α T = φ((x - ρ) T) for 0 < x - ρ <= 1/T, otherwise no solution."""
    if rho < 0 or not T > 0:
        raise DomainError(f"steady_state: need rho >= 0 and T > 0, got {rho}, {T}")
    if not x > 0:
        raise DomainError(f"steady_state: marginal product x must be > 0, got {x}")
    # the band is tested on x itself; (x - ρ)T can round just past 1 at the top
    if not rho < x <= rho + 1.0 / T:
        return AlphaOutcome(NO_SOLUTION)
    alpha = phi((x - rho) * T) / T
    h = TruncatedExponential(rho, T) if rho > 0 else None
    residual = abs(alpha * h.weighted_integral(alpha - x) - 1.0) if h else math.nan
    return AlphaOutcome(SOLVED, alpha, alpha >= x, residual, (alpha,))


@dataclass(frozen=True)
class SteadyStateReport:
    k_values: np.ndarray
    fprime_values: np.ndarray
    alpha: np.ndarray
    status: tuple
    admissible: np.ndarray

    @property
    def admissible_fprime_range(self):
        sel = self.fprime_values[self.admissible]
        return (float(sel.min()), float(sel.max())) if sel.size else None

    @property
    def admissible_k_sup(self):
        sel = self.k_values[self.admissible]
        return float(sel.max()) if sel.size else None

    def rows(self):
        for k, x, a, s in zip(self.k_values, self.fprime_values, self.alpha, self.status):
            yield k, x, a, s


def scan_equilibrium_points(h: DiscountSpec, f, k_grid, workers=1) -> SteadyStateReport:
    """Solve for α at every k in ``k_grid``; results are ordered by grid index."""
    k = np.asarray(k_grid, dtype=float)
    if k.ndim != 1 or np.any(k <= 0) or np.any(np.diff(k) <= 0):
        raise DomainError("steady_state: k_grid must be positive and strictly increasing")
    x = np.asarray(f.marginal(k), dtype=float)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(lambda xv: solve_alpha(h, xv), x))
    else:
        outcomes = [solve_alpha(h, xv) for xv in x]
    return SteadyStateReport(
        k,
        x,
        np.array([o.alpha for o in outcomes]),
        tuple(o.status for o in outcomes),
        np.array([o.admissible for o in outcomes], dtype=bool),
    )
