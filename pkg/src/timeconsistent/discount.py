"""Discount functions h(t), their derivatives and exponentially weighted integrals.

Five parametric families are supported. Every one satisfies h(0) = 1, is
non-increasing, non-negative and has a finite total mass.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ._quadrature import quad_halfline, quad_interval
from .errors import DivergenceError, DomainError, KinkError

QUAD_EPSREL = 1e-10


def _as_array(t):
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError(f"discount: time must be >= 0, got {t!r}")
    return arr


def _ret(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


def _exp_integral(rate, length):
    """∫_0^length e^{-rate·u} du, stable as rate -> 0."""
    x = rate * length
    if abs(x) < 1e-8:
        return length * (1.0 - 0.5 * x)
    return -math.expm1(-x) / rate


class DiscountSpec:
    """Common interface. Concrete families are frozen dataclasses below."""

    family: str = ""

    #: points where h jumps; pointwise h' is undefined there
    @property
    def kinks(self) -> tuple:
        return ()

    @property
    def decay_floor(self) -> float:
        """Smallest exponential decay rate; ∫h e^{-at} needs a > -decay_floor."""
        raise NotImplementedError

    # -- pointwise -------------------------------------------------------
    def h(self, t, side=None):
        raise NotImplementedError

    def h_prime(self, t, side=None):
        raise NotImplementedError

    def inst_rate(self, t):
        raise NotImplementedError

    def jumps(self):
        """List of (time, h(t+) - h(t-)) for every discontinuity of h."""
        return []

    def _check_kink(self, arr, side):
        if side is None and self.kinks and np.any(np.isin(arr, self.kinks)):
            raise KinkError(
                f"discount: h' undefined at the jump t={self.kinks[0]} of {self.family}; "
                "request a one-sided value"
            )

    # -- integrals -------------------------------------------------------
    def converges(self, a) -> bool:
        return a > -self.decay_floor

    def _require_convergence(self, a):
        if not self.converges(a):
            raise DivergenceError(
                f"discount: ∫h(t)e^(-a t)dt diverges for {self.family}: need a > "
                f"{-self.decay_floor!r}, got a={a!r}"
            )

    def weighted_integral(self, a, method="auto"):
        """J(a) = ∫_0^∞ h(t) e^{-a t} dt."""
        return self.shifted_weighted_integral(a, 0.0, method=method)

    def shifted_weighted_integral(self, a, shift, method="auto"):
        """∫_0^∞ h(u + shift) e^{-a u} du."""
        if shift < 0:
            raise DomainError(f"discount: shift must be >= 0, got {shift!r}")
        self._require_convergence(a)
        if method == "quadrature":
            return self._quadrature(a, shift)
        if method != "auto":
            raise ValueError(f"unknown method {method!r}")
        return self._closed_form(a, shift)

    def _quadrature(self, a, shift):
        breaks = [k - shift for k in self.kinks if k > shift]
        rate = max(a + self.decay_floor, 1e-6) if math.isfinite(self.decay_floor) else 1.0

        def integrand(u):
            log_h = self._log_h(u + shift)
            return math.exp(log_h - a * u) if log_h > -math.inf else 0.0

        return quad_halfline(
            integrand,
            breaks=breaks,
            scale=1.0 / rate,
            epsrel=QUAD_EPSREL * 1e-2,
        )

    def _log_h(self, t):
        """Scalar log h(t); -inf where h vanishes."""
        hv = float(self.h(t))
        return math.log(hv) if hv > 0 else -math.inf

    def _closed_form(self, a, shift):
        raise NotImplementedError

    def total_mass(self):
        """H = ∫_0^∞ h."""
        return self.weighted_integral(0.0)

    def tail_mass(self, t):
        """∫_t^∞ h."""
        return self.shifted_weighted_integral(0.0, t)

    def to_dict(self):
        return {"family": self.family, **asdict(self)}


@dataclass(frozen=True)
class Exponential(DiscountSpec):
    rho: float
    family = "exponential"

    def __post_init__(self):
        if not self.rho > 0:
            raise DomainError(f"discount: exponential rho must be > 0, got {self.rho}")

    @property
    def decay_floor(self):
        return self.rho

    def h(self, t, side=None):
        arr = _as_array(t)
        return _ret(np.exp(-self.rho * arr), t)

    def h_prime(self, t, side=None):
        arr = _as_array(t)
        return _ret(-self.rho * np.exp(-self.rho * arr), t)

    def inst_rate(self, t):
        arr = _as_array(t)
        return _ret(np.full_like(arr, self.rho), t)

    def _closed_form(self, a, shift):
        return math.exp(-self.rho * shift) / (self.rho + a)


@dataclass(frozen=True)
class Mixture(DiscountSpec):
    """h(t) = ω e^{-ρ1 t} + (1-ω) e^{-ρ2 t} with ρ1 < ρ2."""

    omega: float
    rho1: float
    rho2: float
    family = "mixture"

    def __post_init__(self):
        if not 0.0 <= self.omega <= 1.0:
            raise DomainError(f"discount: mixture omega must lie in [0, 1], got {self.omega}")
        if not 0.0 < self.rho1 < self.rho2:
            raise DomainError(
                f"discount: mixture needs 0 < rho1 < rho2, got {self.rho1}, {self.rho2}"
            )

    @property
    def rho0(self):
        return self.omega * self.rho1 + (1.0 - self.omega) * self.rho2

    @property
    def decay_floor(self):
        return self.rho1 if self.omega > 0 else self.rho2

    def h(self, t, side=None):
        arr = _as_array(t)
        w = self.omega
        return _ret(w * np.exp(-self.rho1 * arr) + (1 - w) * np.exp(-self.rho2 * arr), t)

    def h_prime(self, t, side=None):
        arr = _as_array(t)
        w = self.omega
        val = -(w * self.rho1 * np.exp(-self.rho1 * arr)
                + (1 - w) * self.rho2 * np.exp(-self.rho2 * arr))
        return _ret(val, t)

    def inst_rate(self, t):
        arr = _as_array(t)
        w, d = self.omega, self.rho2 - self.rho1
        with np.errstate(over="ignore"):
            denom = w * np.exp(d * arr) + (1 - w)
        return _ret(self.rho1 + d * (1 - w) / denom, t)

    def _closed_form(self, a, shift):
        w = self.omega
        out = 0.0
        if w > 0:
            out += w * math.exp(-self.rho1 * shift) / (self.rho1 + a)
        if w < 1:
            out += (1 - w) * math.exp(-self.rho2 * shift) / (self.rho2 + a)
        return out


@dataclass(frozen=True)
class QuasiHyperbolic(DiscountSpec):
    """h(t) = e^{-ρt} for t <= τ and δ e^{-ρt} after."""

    rho: float
    tau: float
    delta: float
    family = "quasi_hyperbolic"

    def __post_init__(self):
        if not self.rho > 0:
            raise DomainError(f"discount: quasi_hyperbolic rho must be > 0, got {self.rho}")
        if not self.tau > 0:
            raise DomainError(f"discount: quasi_hyperbolic tau must be > 0, got {self.tau}")
        if not 0.0 < self.delta <= 1.0:
            raise DomainError(
                f"discount: quasi_hyperbolic delta must lie in (0, 1], got {self.delta}"
            )

    @property
    def kinks(self):
        return (self.tau,) if self.delta < 1 else ()

    @property
    def decay_floor(self):
        return self.rho

    def _factor(self, arr, side):
        after = arr > self.tau if side != "right" else arr >= self.tau
        return np.where(after, self.delta, 1.0)

    def h(self, t, side=None):
        arr = _as_array(t)
        return _ret(self._factor(arr, side) * np.exp(-self.rho * arr), t)

    def h_prime(self, t, side=None):
        arr = _as_array(t)
        self._check_kink(arr, side)
        return _ret(-self.rho * self._factor(arr, side) * np.exp(-self.rho * arr), t)

    def inst_rate(self, t):
        arr = _as_array(t)
        self._check_kink(arr, None)
        return _ret(np.full_like(arr, self.rho), t)

    def jumps(self):
        if self.delta < 1:
            return [(self.tau, -(1 - self.delta) * math.exp(-self.rho * self.tau))]
        return []

    def _closed_form(self, a, shift):
        c = self.rho + a
        base = math.exp(-self.rho * shift)
        if shift >= self.tau:
            return self.delta * base / c
        return base * (1.0 - (1.0 - self.delta) * math.exp(-c * (self.tau - shift))) / c


@dataclass(frozen=True)
class GeneralizedHyperbolic(DiscountSpec):
    """h(t) = (1 + a t)^{-b/a} e^{-ρt}."""

    a: float
    b: float
    rho: float
    family = "generalized_hyperbolic"

    def __post_init__(self):
        if not self.a > 0 or not self.b > 0:
            raise DomainError(
                f"discount: generalized_hyperbolic needs a > 0 and b > 0, got {self.a}, {self.b}"
            )
        if self.rho < 0:
            raise DomainError(f"discount: generalized_hyperbolic rho must be >= 0, got {self.rho}")
        if self.rho == 0 and not self.b > self.a:
            raise DivergenceError(
                "discount: generalized_hyperbolic with rho = 0 needs b > a for a finite ∫h"
            )

    @property
    def decay_floor(self):
        return self.rho

    def converges(self, a):
        return a > -self.rho or (a == -self.rho and self.b > self.a)

    def h(self, t, side=None):
        arr = _as_array(t)
        return _ret(np.power(1 + self.a * arr, -self.b / self.a) * np.exp(-self.rho * arr), t)

    def h_prime(self, t, side=None):
        arr = _as_array(t)
        hv = np.power(1 + self.a * arr, -self.b / self.a) * np.exp(-self.rho * arr)
        return _ret(-hv * (self.rho + self.b / (1 + self.a * arr)), t)

    def inst_rate(self, t):
        arr = _as_array(t)
        return _ret(self.rho + self.b / (1 + self.a * arr), t)

    def _log_h(self, t):
        return -(self.b / self.a) * math.log1p(self.a * t) - self.rho * t

    def _quadrature(self, a, shift):
        # substitute v = log(1 + a' u): the power-law head becomes smooth and
        # the exponential factor cuts off double-exponentially past v* = log(a'/c)
        p = self.b / self.a
        base = 1.0 + self.a * shift
        slope = self.a / base
        c = a + self.rho
        scale = base ** (-p) * math.exp(-self.rho * shift) / slope

        def integrand(v):
            if v > 700.0:
                return 0.0 if c > 0 else scale * math.exp((1.0 - p) * v)
            return scale * math.exp((1.0 - p) * v - c * math.expm1(v) / slope)

        v_star = math.log(slope / c) if c > 0 else 0.0
        breaks = [v_star, v_star + 2.0] if v_star > 0 else []
        return quad_halfline(integrand, breaks=breaks, scale=max(v_star, 1.0), epsrel=QUAD_EPSREL * 1e-2)

    def _closed_form(self, a, shift):
        if a == -self.rho and shift == 0:
            # pure power law: ∫(1+at)^{-p} dt = 1 / (a (p - 1))
            return 1.0 / (self.a * (self.b / self.a - 1.0))
        return self._quadrature(a, shift)


@dataclass(frozen=True)
class TruncatedExponential(DiscountSpec):
    """h(t) = e^{-ρt} on [0, t_cut] and 0 afterwards."""

    rho: float
    t_cut: float
    family = "truncated_exponential"

    def __post_init__(self):
        if not self.rho > 0:
            raise DomainError(f"discount: truncated_exponential rho must be > 0, got {self.rho}")
        if not self.t_cut > 0:
            raise DomainError(
                f"discount: truncated_exponential t_cut must be > 0, got {self.t_cut}"
            )

    @property
    def kinks(self):
        return (self.t_cut,)

    @property
    def decay_floor(self):
        return math.inf

    def h(self, t, side=None):
        arr = _as_array(t)
        inside = arr < self.t_cut if side == "right" else arr <= self.t_cut
        return _ret(np.where(inside, np.exp(-self.rho * arr), 0.0), t)

    def h_prime(self, t, side=None):
        arr = _as_array(t)
        self._check_kink(arr, side)
        inside = arr < self.t_cut if side == "right" else arr <= self.t_cut
        return _ret(np.where(inside, -self.rho * np.exp(-self.rho * arr), 0.0), t)

    def inst_rate(self, t):
        arr = _as_array(t)
        if np.any(arr > self.t_cut):
            raise DomainError(
                f"discount: inst_rate undefined past t_cut={self.t_cut} where h = 0"
            )
        self._check_kink(arr, None)
        return _ret(np.full_like(arr, self.rho), t)

    def jumps(self):
        return [(self.t_cut, -math.exp(-self.rho * self.t_cut))]

    def converges(self, a):
        return True

    def _quadrature(self, a, shift):
        if shift >= self.t_cut:
            return 0.0
        return quad_interval(
            lambda u: math.exp(-self.rho * (u + shift) - a * u),
            0.0,
            self.t_cut - shift,
            epsrel=QUAD_EPSREL * 1e-2,
        )

    def _closed_form(self, a, shift):
        if shift >= self.t_cut:
            return 0.0
        return math.exp(-self.rho * shift) * _exp_integral(self.rho + a, self.t_cut - shift)


FAMILIES = {
    cls.family: cls
    for cls in (Exponential, Mixture, QuasiHyperbolic, GeneralizedHyperbolic, TruncatedExponential)
}


def from_dict(data) -> DiscountSpec:
    """Build a DiscountSpec from ``{"family": ..., **params}``."""
    data = dict(data)
    family = data.pop("family", None)
    if family not in FAMILIES:
        raise DomainError(f"discount: unknown family {family!r}; expected one of {sorted(FAMILIES)}")
    try:
        return FAMILIES[family](**data)
    except TypeError as exc:
        raise DomainError(f"discount: bad parameters for {family}: {exc}") from None


def to_dict(spec: DiscountSpec) -> dict:
    return spec.to_dict()


# functional aliases -----------------------------------------------------

def eval_h(spec, t, side=None):
    return spec.h(t, side=side)


def eval_h_prime(spec, t, side=None):
    return spec.h_prime(t, side=side)


def inst_rate(spec, t):
    return spec.inst_rate(t)


def weighted_integral(spec, a, method="auto"):
    return spec.weighted_integral(a, method=method)
