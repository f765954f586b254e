"""Economic environments: market paths (r(t), w(t)) and production functions f(k).

Both expose ``f(t, k)`` (the capital drift before consumption) and
``f_k(t, k)``, which is all the flow integrators need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ._quadrature import quad_interval
from .errors import DivergenceError, DomainError


# ---------------------------------------------------------------------------
# time functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Constant:
    value: float

    @property
    def breakpoints(self):
        return ()

    @property
    def horizon(self):
        """Time after which the function is constant."""
        return 0.0

    @property
    def tail(self):
        return self.value

    @property
    def is_piecewise_constant(self):
        return True

    def __call__(self, t):
        return np.full(np.shape(t), self.value) if np.ndim(t) else self.value

    def cumulative(self, t):
        """∫_0^t of the function."""
        return self.value * np.asarray(t, dtype=float) if np.ndim(t) else self.value * t

    def to_json(self):
        return {"kind": "constant", "value": self.value}


@dataclass(frozen=True)
class PiecewiseConstant:
    """values[i] on [breaks[i-1], breaks[i]) with breaks[-1] = -inf, breaks[n] = inf."""

    breaks: tuple
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "breaks", tuple(float(b) for b in self.breaks))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.values) != len(self.breaks) + 1:
            raise DomainError("environment: piecewise_constant needs len(values) == len(breaks) + 1")
        if any(b <= 0 for b in self.breaks) or list(self.breaks) != sorted(set(self.breaks)):
            raise DomainError("environment: piecewise_constant breaks must be positive and increasing")

    @property
    def breakpoints(self):
        return self.breaks

    @property
    def horizon(self):
        return self.breaks[-1] if self.breaks else 0.0

    @property
    def tail(self):
        return self.values[-1]

    @property
    def is_piecewise_constant(self):
        return True

    def __call__(self, t):
        idx = np.searchsorted(self.breaks, t, side="right")
        out = np.asarray(self.values)[idx]
        return float(out) if np.ndim(t) == 0 else out

    def cumulative(self, t):
        edges = np.concatenate([[0.0], self.breaks])
        vals = np.asarray(self.values)
        seg = np.diff(edges) * vals[:-1]
        acc = np.concatenate([[0.0], np.cumsum(seg)])
        tt = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.breaks, tt, side="right")
        out = acc[idx] + vals[idx] * (tt - edges[idx])
        return float(out) if np.ndim(t) == 0 else out

    def to_json(self):
        return {"kind": "piecewise_constant", "breaks": list(self.breaks), "values": list(self.values)}


@dataclass(frozen=True)
class Tabulated:
    """Linear interpolation between nodes, constant extrapolation outside."""

    times: tuple
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(b) for b in self.times))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.times) != len(self.values) or len(self.times) < 2:
            raise DomainError("environment: tabulated needs >= 2 matching times and values")
        if np.any(np.diff(self.times) <= 0) or self.times[0] < 0:
            raise DomainError("environment: tabulated times must be >= 0 and strictly increasing")

    @property
    def breakpoints(self):
        return self.times

    @property
    def horizon(self):
        return self.times[-1]

    @property
    def tail(self):
        return self.values[-1]

    @property
    def is_piecewise_constant(self):
        return False

    def __call__(self, t):
        out = np.interp(t, self.times, self.values)
        return float(out) if np.ndim(t) == 0 else out

    def cumulative(self, t):
        x = np.asarray(self.times)
        y = np.asarray(self.values)
        tt = np.asarray(t, dtype=float)
        # prepend [0, x0] with constant y0
        edges = np.concatenate([[0.0], x]) if x[0] > 0 else x
        yv = np.concatenate([[y[0]], y]) if x[0] > 0 else y
        seg = 0.5 * (yv[1:] + yv[:-1]) * np.diff(edges)
        acc = np.concatenate([[0.0], np.cumsum(seg)])
        idx = np.clip(np.searchsorted(edges, tt, side="right") - 1, 0, len(edges) - 1)
        dt = tt - edges[idx]
        val_at = np.interp(tt, x, y)
        out = np.where(
            idx < len(edges) - 1,
            acc[idx] + 0.5 * (yv[idx] + val_at) * dt,
            acc[-1] + yv[-1] * dt,
        )
        return float(out) if np.ndim(t) == 0 else out

    def to_json(self):
        return {"kind": "tabulated", "times": list(self.times), "values": list(self.values)}


def time_function_from_json(data):
    if isinstance(data, (int, float)):
        return Constant(float(data))
    kind = data.get("kind")
    if kind == "constant":
        return Constant(float(data["value"]))
    if kind == "piecewise_constant":
        return PiecewiseConstant(tuple(data["breaks"]), tuple(data["values"]))
    if kind == "tabulated":
        return Tabulated(tuple(data["times"]), tuple(data["values"]))
    raise DomainError(f"environment: unknown time-function kind {kind!r}")


# ---------------------------------------------------------------------------
# market path
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MarketPath:
    """Interest rate r(t) and wage w(t); capital drift is w(t) + r(t) k."""

    r: object
    w: object = field(default_factory=lambda: Constant(0.0))
    t_infinity: float = 200.0

    def __post_init__(self):
        for name in ("r", "w"):
            val = getattr(self, name)
            if isinstance(val, (int, float)):
                object.__setattr__(self, name, Constant(float(val)))
        w_nodes = [self.w(0.0), self.w.tail, *[self.w(b) for b in self.w.breakpoints]]
        if isinstance(self.w, PiecewiseConstant):
            w_nodes += list(self.w.values)
        if min(w_nodes) < 0:
            raise DomainError("environment: wages must be >= 0")
        if self.w.tail > 0 and not self.r.tail > 0:
            raise DivergenceError(
                "environment: human wealth diverges: the long-run interest rate must be > 0"
            )

    @property
    def horizon(self):
        """Time after which r and w are both constant."""
        return max(self.r.horizon, self.w.horizon)

    @property
    def breakpoints(self):
        return tuple(sorted(set(self.r.breakpoints) | set(self.w.breakpoints)))

    def f(self, t, k):
        return self.w(t) + self.r(t) * k

    def f_k(self, t, k):
        return self.r(t) + 0.0 * np.asarray(k)

    def growth(self, t, s):
        """exp(∫_t^s r)."""
        return np.exp(self.r.cumulative(s) - self.r.cumulative(t))

    def human_wealth(self, t):
        """HW(t) = ∫_t^∞ exp(-∫_t^s r) w(s) ds."""
        if np.ndim(t):
            return np.array([self._human_wealth(float(x)) for x in np.ravel(t)]).reshape(np.shape(t))
        return self._human_wealth(float(t))

    @lru_cache(maxsize=65536)
    def _human_wealth(self, t):
        if t < 0:
            raise DomainError(f"environment: time must be >= 0, got {t}")
        tail = self.w.tail / self.r.tail if self.w.tail > 0 else 0.0
        end = max(self.horizon, t)
        total = math.exp(-(self.r.cumulative(end) - self.r.cumulative(t))) * tail
        if end == t:
            return total
        cuts = sorted({t, end, *(b for b in self.breakpoints if t < b < end)})
        r_at_t = self.r.cumulative(t)
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            disc = math.exp(-(self.r.cumulative(lo) - r_at_t))
            if self.r.is_piecewise_constant and self.w.is_piecewise_constant:
                mid = 0.5 * (lo + hi)
                rv, wv = self.r(mid), self.w(mid)
                length = hi - lo
                x = rv * length
                seg = length * (1 - 0.5 * x) if abs(x) < 1e-10 else -math.expm1(-x) / rv
                total += disc * wv * seg
            else:
                r_lo = self.r.cumulative(lo)
                total += disc * quad_interval(
                    lambda s: math.exp(-(self.r.cumulative(s) - r_lo)) * self.w(s), lo, hi
                )
        return total

    def to_json(self):
        return {
            "kind": "market",
            "r": self.r.to_json(),
            "w": self.w.to_json(),
            "t_infinity": self.t_infinity,
        }


# ---------------------------------------------------------------------------
# production functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CobbDouglas:
    """f(k) = A k^θ, strictly concave with Inada conditions."""

    A: float
    theta: float

    def __post_init__(self):
        if not self.A > 0 or not 0 < self.theta < 1:
            raise DomainError(
                f"environment: cobb_douglas needs A > 0 and 0 < theta < 1, got {self.A}, {self.theta}"
            )

    def output(self, k):
        return self.A * np.power(k, self.theta)

    def marginal(self, k):
        return self.theta * self.A * np.power(k, self.theta - 1)

    def curvature(self, k):
        return self.theta * (self.theta - 1) * self.A * np.power(k, self.theta - 2)

    def capital_for_marginal(self, x):
        """The k with f'(k) = x."""
        if np.any(np.asarray(x) <= 0):
            raise DomainError("environment: marginal product must be > 0")
        return np.power(np.asarray(x) / (self.theta * self.A), 1.0 / (self.theta - 1))

    def f(self, t, k):
        return self.output(k)

    def f_k(self, t, k):
        return self.marginal(k)

    def to_json(self):
        return {"kind": "production", "family": "cobb_douglas", "A": self.A, "theta": self.theta}


@dataclass(frozen=True)
class AffineCapital:
    """f(k) = r k + w; used as a stationary market."""

    r: float
    w: float = 0.0

    def __post_init__(self):
        if self.w < 0:
            raise DomainError("environment: affine wage level must be >= 0")

    def output(self, k):
        return self.r * np.asarray(k) + self.w

    def marginal(self, k):
        return self.r + 0.0 * np.asarray(k)

    def curvature(self, k):
        return 0.0 * np.asarray(k)

    def f(self, t, k):
        return self.output(k)

    def f_k(self, t, k):
        return self.marginal(k)

    def to_json(self):
        return {"kind": "production", "family": "affine", "r": self.r, "w": self.w}


def environment_from_json(data):
    kind = data.get("kind")
    if kind == "market":
        return MarketPath(
            time_function_from_json(data["r"]),
            time_function_from_json(data.get("w", 0.0)),
            float(data.get("t_infinity", 200.0)),
        )
    if kind == "production":
        family = data.get("family")
        if family == "cobb_douglas":
            return CobbDouglas(float(data["A"]), float(data["theta"]))
        if family == "affine":
            return AffineCapital(float(data["r"]), float(data.get("w", 0.0)))
        raise DomainError(f"environment: unknown production family {family!r}")
    raise DomainError(f"environment: unknown environment kind {kind!r}")
