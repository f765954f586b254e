"""Capital and consumption paths under equilibrium, precommitment and naive plans."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from ._quadrature import gauss_legendre_panels, quad_halfline
from .discount import DiscountSpec
from .environment import MarketPath
from .errors import DivergenceError, DomainError
from .propensity import lambda_constant

DEFAULT_HORIZON = 60.0
DEFAULT_STEP = 0.01


@dataclass(frozen=True)
class PathSample:
    times: np.ndarray
    capital: np.ndarray
    consumption: np.ndarray
    label: str
    truncated: bool = False

    def __post_init__(self):
        for name in ("times", "capital", "consumption"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if not (len(self.times) == len(self.capital) == len(self.consumption)):
            raise DomainError("trajectory: times, capital and consumption must have equal length")
        if not (np.all(np.isfinite(self.capital)) and np.all(np.isfinite(self.consumption))):
            raise DomainError("trajectory: path values must be finite")
        if np.any(self.consumption <= 0):
            raise DomainError("trajectory: consumption must be > 0")


def time_grid(t0, horizon, step, breakpoints=()):
    """Uniform grid on [t0, t0 + horizon] with breakpoints inserted."""
    if not step > 0:
        raise DomainError(f"trajectory: step must be > 0, got {step}")
    if not horizon > 0:
        raise DomainError(f"trajectory: horizon must be > 0, got {horizon}")
    n = max(int(round(horizon / step)), 1)
    base = t0 + np.linspace(0.0, horizon, n + 1)
    extra = [b for b in breakpoints if base[0] < b < base[-1]]
    pts = np.union1d(base, extra)
    keep = np.concatenate([[True], np.diff(pts) > 1e-9 * step])
    return pts[keep]


def _admissible(env, t, k):
    if isinstance(env, MarketPath):
        return k + env.human_wealth(t) > 0
    return k > 0


def integrate_flow(policy, env, t0, k0, horizon=DEFAULT_HORIZON, step=DEFAULT_STEP, label="equilibrium"):
    """Classical RK4 for dk/dt = f(t, k) - σ(t, k).

    Steps land exactly on the environment's breakpoints. If capital or
    consumption leaves the admissible domain, the path stops there with
    ``truncated=True``.
    """
    times = time_grid(t0, horizon, step, getattr(env, "breakpoints", ()))

    def drift(t, k):
        return float(env.f(t, k)) - float(policy(t, k))

    ks = [float(k0)]
    cs = [float(policy(t0, k0))]
    truncated = False
    for a, b in zip(times[:-1], times[1:]):
        dt, k = b - a, ks[-1]
        try:
            k1 = drift(a, k)
            k2 = drift(a + dt / 2, k + dt / 2 * k1)
            k3 = drift(a + dt / 2, k + dt / 2 * k2)
            k4 = drift(b, k + dt * k3)
            k_next = k + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            c_next = float(policy(b, k_next)) if _admissible(env, b, k_next) else math.nan
        except DomainError:
            c_next = math.nan
            k_next = math.nan
        if not (math.isfinite(k_next) and math.isfinite(c_next) and c_next > 0):
            truncated = True
            break
        ks.append(k_next)
        cs.append(c_next)
    return PathSample(times[: len(ks)], ks, cs, label, truncated)


# ---------------------------------------------------------------------------
# log utility, constant r and w
# ---------------------------------------------------------------------------

def equilibrium_capital_log(h: DiscountSpec, r, w, k0, t):
    """Exact capital under the log equilibrium policy c = (k + w/r)/H.

    dk/dt = (r - 1/H) k + w (1 - 1/(rH)); solved in a form that stays
    accurate as r - 1/H -> 0.
    """
    mass = h.total_mass()
    a = r - 1.0 / mass
    b = w * (1.0 - 1.0 / (r * mass))
    t = np.asarray(t, dtype=float)
    x = a * t
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(np.abs(x) < 1e-12, 1.0 + 0.5 * x, np.expm1(x) / np.where(x == 0, 1.0, x))
    out = k0 * np.exp(x) + b * t * ratio
    return float(out) if out.ndim == 0 else out


def optimal_propensity_log(h: DiscountSpec, t):
    """Propensity of the time-0 optimal log plan: h(t) / ∫_t^∞ h."""
    tail = h.tail_mass(t)
    if not tail > 0:
        raise DomainError(f"trajectory: ∫_t^∞ h = 0 at t={t}; propensity undefined")
    return float(h.h(t)) / tail


def precommitment_path_log(h: DiscountSpec, r, w, k0, horizon=DEFAULT_HORIZON, step=DEFAULT_STEP):
    """c(t) = c0 h(t) e^{rt}, c0 = (k0 + w/r)/H; k + w/r = c0 e^{rt} ∫_t^∞ h."""
    mass = h.total_mass()
    if not r > 1.0 / mass:
        raise DomainError(
            f"trajectory: psychological rate exceeds interest: need r > 1/∫h = {1.0 / mass}"
        )
    return precommitment_path(h, r, w, k0, 1.0, horizon, step)


# ---------------------------------------------------------------------------
# CRRA, constant r and w
# ---------------------------------------------------------------------------

def _budget_integral(h: DiscountSpec, r, gamma):
    """∫_0^∞ h(s)^{1/γ} exp(-r(γ-1)s/γ) ds."""
    if gamma == 1:
        return h.total_mass()
    c = r * (gamma - 1) / gamma
    floor = h.decay_floor
    if math.isfinite(floor) and not floor / gamma + c > 0:
        raise DivergenceError(
            f"trajectory: naive budget integral diverges: need decay/γ + r(γ-1)/γ > 0, got {floor / gamma + c}"
        )

    def integrand(s):
        log_h = h._log_h(s)
        return math.exp(log_h / gamma - c * s) if log_h > -math.inf else 0.0

    rate = floor / gamma + c if math.isfinite(floor) else 1.0
    return quad_halfline(integrand, breaks=h.kinks, scale=1.0 / max(rate, 1e-6), epsrel=1e-12)


def naive_propensity(h: DiscountSpec, r, gamma):
    """Initial consumption rate of a planner who re-optimises as if committed.

    The time-0 optimal plan has c(s) ∝ (h(s) e^{rs})^{1/γ}; balancing the budget
    gives c(0) = W / ∫ h^{1/γ} e^{-r(γ-1)s/γ}. In a constant environment every
    self repeats this, so the naive policy is this constant propensity.
    """
    if not gamma > 0:
        raise DomainError(f"trajectory: gamma must be > 0, got {gamma}")
    return 1.0 / _budget_integral(h, r, gamma)


def precommitment_path(h, r, w, k0, gamma, horizon=DEFAULT_HORIZON, step=DEFAULT_STEP):
    """Time-0 optimal plan c(t) = c0 (h(t) e^{rt})^{1/γ} with c0 = W0 / B.

    Capital follows from the budget: k + w/r = c0 e^{rt} ∫_t^∞ h^{1/γ} e^{-r(γ-1)s/γ},
    with the running integral taken panel by panel on the output grid.
    """
    wealth0 = k0 + w / r
    if not wealth0 > 0:
        raise DomainError("trajectory: initial total wealth k0 + w/r must be > 0")
    budget = _budget_integral(h, r, gamma)
    c0 = wealth0 / budget
    times = time_grid(0.0, horizon, step, h.kinks)
    decay = r * (gamma - 1) / gamma

    def weight(s):
        return np.asarray(h.h(s)) ** (1.0 / gamma) * np.exp(-decay * s)

    nodes, wts = gauss_legendre_panels(times)
    spent = np.concatenate([[0.0], np.cumsum(np.sum(wts * weight(nodes), axis=1))])
    growth = np.exp(r * times)
    consumption = c0 * weight(times) * growth
    capital = c0 * growth * (budget - spent) - w / r
    keep = consumption > 0
    return PathSample(times[keep], capital[keep], consumption[keep], "precommitment", not keep.all())


def equilibrium_path(h, r, w, k0, gamma, horizon=DEFAULT_HORIZON, step=DEFAULT_STEP):
    """Constant-propensity equilibrium c = λ (k + w/r), integrated by RK4."""
    lam = lambda_constant(h, r, gamma).lam
    market = MarketPath(r, w)
    return integrate_flow(lambda t, k: lam * (k + w / r), market, 0.0, k0, horizon, step, "equilibrium")


def naive_path(h, r, w, k0, gamma, horizon=DEFAULT_HORIZON, step=DEFAULT_STEP):
    lam = naive_propensity(h, r, gamma)
    market = MarketPath(r, w)
    return integrate_flow(lambda t, k: lam * (k + w / r), market, 0.0, k0, horizon, step, "naive")


def budget_gap(path: PathSample, market: MarketPath):
    """∫ c e^{-∫r} + e^{-∫r}(k_T + HW(T)) - (k_0 + HW(0)) along a path.

    Zero for any path obeying dk/dt = w + rk - c; the terminal term is the
    present value of wealth left at the end of the sample. The consumption
    integral uses Simpson's rule, so consumption should be smooth in t.
    """
    t = path.times
    disc = np.exp(-(market.r.cumulative(t) - market.r.cumulative(t[0])))
    pv = simpson(path.consumption * disc, x=t)
    end = disc[-1] * (path.capital[-1] + market.human_wealth(t[-1]))
    return pv + end - (path.capital[0] + market.human_wealth(t[0]))
