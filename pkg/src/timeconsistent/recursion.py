"""Time-varying propensity to consume under a deterministic interest-rate path.

The equilibrium CRRA policy consumes a fraction λ(t) of total wealth
k + HW(t), where λ solves the functional fixed point

    λ(t)^{-γ} = ∫_t^∞ λ(s)^{1-γ} exp(-(1-γ)∫_t^s (λ - r)) h(s - t) ds.

Past the time ``T_g`` after which r is constant, λ equals the constant
propensity for that rate, so the integral over [t_N, ∞) is evaluated exactly
and only [0, t_N] is discretised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._quadrature import gauss_legendre_panels, quad_halfline, quad_interval
from .discount import DiscountSpec
from .environment import MarketPath, Tabulated
from .errors import ConvergenceError, DivergenceError, DomainError, NoEquilibriumError
from .propensity import lambda_constant, lambda_exponential
from .utility import UtilitySpec


@dataclass(frozen=True)
class PropensityPath:
    """λ on a grid; linear in between, constant outside."""

    grid: np.ndarray
    values: np.ndarray
    residual: float | None = None
    iterations: int | None = None
    history: tuple = field(default=(), repr=False)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape or len(grid) < 2:
            raise DomainError("recursion_solver: grid and values must be 1-d of equal length >= 2")
        if np.any(~(values > 0)):
            raise DomainError("recursion_solver: propensity values must be > 0")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_fn", Tabulated(tuple(grid), tuple(values)))

    def __call__(self, t):
        return self._fn(t)

    def cumulative(self, t):
        """∫_0^t λ."""
        return self._fn.cumulative(t)

    @property
    def tail(self):
        return float(self.values[-1])


def recursion_grid(market: MarketPath, step=0.05, t_end=None):
    """Uniform grid on [0, t_end] with the market breakpoints inserted."""
    if not step > 0:
        raise DomainError(f"recursion_solver: step must be > 0, got {step}")
    if t_end is None:
        t_end = max(market.horizon, 1.0)
    if t_end < market.horizon:
        raise DomainError(
            f"recursion_solver: t_end={t_end} must cover the market horizon {market.horizon}"
        )
    n = max(int(math.ceil(t_end / step - 1e-9)), 1)
    base = np.linspace(0.0, n * step, n + 1)
    extra = [b for b in market.breakpoints if 0 < b < base[-1]]
    pts = np.union1d(base, extra)
    keep = np.concatenate([[True], np.diff(pts) > 1e-9 * step])
    return pts[keep]


class _RecursionOperator:
    """One application of the fixed-point map on a fixed grid."""

    def __init__(self, h: DiscountSpec, market: MarketPath, gamma, grid, lam_inf):
        self.h, self.market, self.gamma = h, market, gamma
        self.grid = np.asarray(grid, dtype=float)
        self.lam_inf = lam_inf
        self.nodes, self.weights = gauss_legendre_panels(self.grid)
        self.r_nodes = market.r.cumulative(self.nodes)
        self.r_grid = market.r.cumulative(self.grid)
        r_inf = market.r.tail
        t_last = self.grid[-1]
        a_tail = (1 - gamma) * (lam_inf - r_inf)
        self.tail_integrals = np.array(
            [h.shifted_weighted_integral(a_tail, t_last - t) for t in self.grid]
        )
        self.kernels = [h.h(self.nodes[i:] - t) for i, t in enumerate(self.grid)]
        self.splits = self._jump_panels()

    def _jump_panels(self):
        """Quadrature data for panels in which h(s - t_i) jumps.

        Each such panel is re-integrated as two panels split at the jump; the
        correction is (split rule) - (plain rule).
        """
        rows, pts, wts = [], [], []
        for i, t in enumerate(self.grid):
            for kink in self.h.kinks:
                s = t + kink
                if s >= self.grid[-1]:
                    continue
                j = int(np.searchsorted(self.grid, s, side="right")) - 1
                lo, hi = self.grid[j], self.grid[j + 1]
                if s - lo > 1e-12 and hi - s > 1e-12:
                    split_x, split_w = gauss_legendre_panels([lo, s, hi])
                    rows.append(i)
                    pts.append(np.concatenate([split_x.ravel(), self.nodes[j]]))
                    wts.append(np.concatenate([split_w.ravel(), -self.weights[j]]))
        if not rows:
            return None
        rows = np.asarray(rows)
        pts = np.asarray(pts)
        kern = self.h.h(pts - self.grid[rows][:, None])
        return rows, pts, np.asarray(wts) * kern, self.market.r.cumulative(pts)

    def __call__(self, values):
        g = self.gamma
        path = PropensityPath(self.grid, values)
        lam_nodes = path(self.nodes)
        phi_nodes = path.cumulative(self.nodes) - self.r_nodes
        phi_grid = path.cumulative(self.grid) - self.r_grid
        power = lam_nodes ** (1 - g)
        totals = np.empty(len(self.grid))
        for i in range(len(self.grid)):
            integrand = power[i:] * np.exp(-(1 - g) * (phi_nodes[i:] - phi_grid[i])) * self.kernels[i]
            tail = (
                self.lam_inf ** (1 - g)
                * math.exp(-(1 - g) * (phi_grid[-1] - phi_grid[i]))
                * self.tail_integrals[i]
            )
            totals[i] = np.sum(self.weights[i:] * integrand) + tail
        if self.splits is not None:
            rows, pts, weighted_kernel, r_pts = self.splits
            phi = path.cumulative(pts) - r_pts - phi_grid[rows][:, None]
            corr = np.sum(weighted_kernel * path(pts) ** (1 - g) * np.exp(-(1 - g) * phi), axis=1)
            np.add.at(totals, rows, corr)
        return totals ** (-1.0 / g)


def _stationary_lambda(h, market, gamma):
    try:
        return lambda_constant(h, market.r.tail, gamma).lam
    except (NoEquilibriumError, DivergenceError) as exc:
        raise NoEquilibriumError(
            f"recursion_solver: no constant propensity for the long-run rate: {exc}"
        ) from None


def solve_recursion(
    h: DiscountSpec,
    market: MarketPath,
    gamma,
    grid=None,
    tol=1e-8,
    damping=0.5,
    max_iter=500,
    step=0.05,
    t_end=None,
    initial=None,
) -> PropensityPath:
    """Damped Picard iteration for λ(t); halves the damping when the residual grows."""
    if not gamma > 0:
        raise DomainError(f"recursion_solver: gamma must be > 0, got {gamma}")
    if not 0 < damping <= 1:
        raise DomainError(f"recursion_solver: damping must lie in (0, 1], got {damping}")
    if grid is None:
        grid = recursion_grid(market, step, t_end)
    grid = np.asarray(grid, dtype=float)
    if grid[0] != 0 or np.any(np.diff(grid) <= 0) or grid[-1] < market.horizon:
        raise DomainError(
            "recursion_solver: grid must start at 0, increase strictly and cover the market horizon"
        )
    lam_inf = _stationary_lambda(h, market, gamma)
    operator = _RecursionOperator(h, market, gamma, grid, lam_inf)

    if initial is not None:
        values = np.asarray(initial(grid) if callable(initial) else initial, dtype=float)
    else:
        try:
            start = lambda_exponential(float(h.inst_rate(0.0)), float(market.r(0.0)), gamma).lam
        except NoEquilibriumError:
            start = lam_inf
        values = np.full(len(grid), start)

    history = []
    d = damping
    for it in range(1, max_iter + 1):
        mapped = operator(values)
        if np.any(~np.isfinite(mapped)) or np.any(mapped <= 0):
            raise ConvergenceError(
                f"recursion_solver: inadmissible iterate at sweep {it}", history
            )
        res = float(np.max(np.abs(mapped - values)))
        history.append(res)
        if res < tol:
            return PropensityPath(grid, values, res, it, tuple(history))
        if len(history) > 1 and res > history[-2]:
            d = max(d / 2, 1e-3)
        values = (1 - d) * values + d * mapped
        if np.any(values <= 0):
            raise ConvergenceError(
                f"recursion_solver: inadmissible iterate at sweep {it}", history
            )
    raise ConvergenceError(
        f"recursion_solver: no convergence in {max_iter} sweeps (last residual {history[-1]:.3e})",
        history,
    )


def recursion_residual(h, market, gamma, path: PropensityPath):
    """Pointwise |T(λ) - λ| of the fixed-point map on the path's own grid."""
    operator = _RecursionOperator(h, market, gamma, path.grid, _stationary_lambda(h, market, gamma))
    return np.abs(operator(path.values) - path.values)


def lambda_bar_constant_discount(market: MarketPath, rho, gamma, grid=None) -> PropensityPath:
    """Closed-form propensity for exponential discounting and any r(t).

    λ̄(t) = 1 / ∫_t^∞ exp(G(s) - G(t)) ds with G(s) = (1/γ)∫_0^s ((1-γ) r - ρ).
    """
    tail_rate = ((1 - gamma) * market.r.tail - rho) / gamma
    if not tail_rate < 0:
        raise DivergenceError(
            "recursion_solver: λ̄ denominator diverges: need (1-γ)r∞ - ρ < 0"
        )
    if grid is None:
        grid = recursion_grid(market)
    grid = np.asarray(grid, dtype=float)

    def big_g(s):
        return ((1 - gamma) * market.r.cumulative(s) - rho * s) / gamma

    horizon = market.horizon
    breaks = market.breakpoints
    out = np.empty(len(grid))
    for n, t in enumerate(grid):
        g_t = big_g(t)
        end = max(horizon, t)
        cuts = sorted({t, end, *(b for b in breaks if t < b < end)})
        total = math.exp(big_g(end) - g_t) / (-tail_rate)
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            if market.r.is_piecewise_constant:
                rate = ((1 - gamma) * market.r(0.5 * (lo + hi)) - rho) / gamma
                x = rate * (hi - lo)
                seg = (hi - lo) * (1 + 0.5 * x) if abs(x) < 1e-10 else math.expm1(x) / rate
                total += math.exp(big_g(lo) - g_t) * seg
            else:
                total += quad_interval(lambda s: math.exp(big_g(s) - g_t), lo, hi)
        out[n] = 1.0 / total
    return PropensityPath(grid, out)


# ---------------------------------------------------------------------------
# policy, value and flow of the CRRA equilibrium
# ---------------------------------------------------------------------------

def total_wealth(market: MarketPath, t, k):
    return np.asarray(k, dtype=float) + market.human_wealth(t)


def policy_sigma(path: PropensityPath, market: MarketPath, t, k):
    """σ(t, k) = λ(t) (k + HW(t))."""
    wealth = total_wealth(market, t, k)
    if np.any(~(wealth > 0)):
        raise DomainError("recursion_solver: total wealth k + HW(t) must be > 0")
    out = path(t) * wealth
    return float(out) if np.ndim(out) == 0 else out


def value_phe(path: PropensityPath, market: MarketPath, h, gamma, t, k):
    """V(t, k) = λ(t)^{-γ} (k + HW(t))^{1-γ} / (1-γ)."""
    if gamma == 1:
        raise DomainError(
            "recursion_solver: the closed-form value needs gamma != 1; use value_along_flow"
        )
    wealth = total_wealth(market, t, k)
    if np.any(~(wealth > 0)):
        raise DomainError("recursion_solver: total wealth k + HW(t) must be > 0")
    out = path(t) ** (-gamma) * wealth ** (1 - gamma) / (1 - gamma)
    return float(out) if np.ndim(out) == 0 else out


def flow_closed_form(path: PropensityPath, market: MarketPath, s, t, k):
    """K(s, t, k) = exp(∫_t^s (r - λ)) (k + HW(t)) - HW(s)."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < t):
        raise DomainError("recursion_solver: flow needs s >= t")
    growth = np.exp(
        market.r.cumulative(s_arr) - market.r.cumulative(t) - path.cumulative(s_arr) + path.cumulative(t)
    )
    out = growth * (k + market.human_wealth(t)) - market.human_wealth(s_arr)
    return float(out) if np.ndim(s) == 0 else out


def value_along_flow(path: PropensityPath, market: MarketPath, h: DiscountSpec, gamma, t, k):
    """∫_t^∞ h(s - t) u(σ(s, K(s, t, k))) ds by adaptive quadrature (any γ)."""
    util = UtilitySpec(gamma)
    wealth0 = float(total_wealth(market, t, k))
    if not wealth0 > 0:
        raise DomainError("recursion_solver: total wealth k + HW(t) must be > 0")
    base = market.r.cumulative(t) - path.cumulative(t)

    def integrand(u):
        s = t + u
        hv = float(h.h(u))
        if hv == 0:
            return 0.0
        wealth = wealth0 * math.exp(market.r.cumulative(s) - path.cumulative(s) - base)
        return hv * util.u(path(s) * wealth)

    breaks = [*h.kinks, *(b - t for b in (*market.breakpoints, *path.grid) if b > t)]
    scale = 1.0 / max(float(h.inst_rate(0.0)), 1e-3)
    return quad_halfline(integrand, breaks=breaks, scale=scale, epsrel=1e-11)
