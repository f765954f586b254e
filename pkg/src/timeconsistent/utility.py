"""CRRA / logarithmic utility, its marginal inverse and concave conjugate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


def _positive(x, what):
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError(f"utility: {what} must be > 0, got {x!r}")
    return arr


def _ret(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


@dataclass(frozen=True)
class UtilitySpec:
    """u(c) = c^(1-γ)/(1-γ), or ln c when ``gamma == 1`` exactly."""

    gamma: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise DomainError(f"utility: gamma must be > 0, got {self.gamma}")

    @property
    def is_log(self) -> bool:
        return self.gamma == 1

    def u(self, c):
        arr = _positive(c, "consumption")
        if self.is_log:
            return _ret(np.log(arr), c)
        g = self.gamma
        return _ret(arr ** (1 - g) / (1 - g), c)

    def u_prime(self, c):
        arr = _positive(c, "consumption")
        return _ret(arr ** (-self.gamma), c)

    def u_double_prime(self, c):
        arr = _positive(c, "consumption")
        return _ret(-self.gamma * arr ** (-self.gamma - 1), c)

    def i(self, x):
        """Inverse marginal utility: u'(i(x)) = x."""
        arr = _positive(x, "marginal utility")
        return _ret(arr ** (-1.0 / self.gamma), x)

    def i_prime(self, x):
        arr = _positive(x, "marginal utility")
        g = self.gamma
        return _ret(-(1.0 / g) * arr ** (-1.0 / g - 1), x)

    def u_tilde(self, x):
        """Concave conjugate max_c (u(c) - x c)."""
        arr = _positive(x, "marginal utility")
        if self.is_log:
            return _ret(-np.log(arr) - 1.0, x)
        g = self.gamma
        return _ret(g / (1 - g) * arr ** ((g - 1) / g), x)

    def u_tilde_prime(self, x):
        # envelope theorem: d/dx max_c (u(c) - xc) = -i(x)
        return -self.i(x)

    def to_dict(self):
        return {"gamma": self.gamma}


def u(spec, c):
    return spec.u(c)


def u_prime(spec, c):
    return spec.u_prime(c)


def i(spec, x):
    return spec.i(x)


def u_tilde(spec, x):
    return spec.u_tilde(x)


def u_tilde_prime(spec, x):
    return spec.u_tilde_prime(x)
