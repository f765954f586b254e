"""Adaptive quadrature helpers on finite panels and the half line."""

import math

import numpy as np
from scipy import integrate

# Gauss-Legendre nodes/weights on [-1, 1], reused by the grid solvers.
GL4_NODES, GL4_WEIGHTS = np.polynomial.legendre.leggauss(4)


def quad_interval(fun, a, b, breaks=(), epsrel=1e-12, epsabs=0.0):
    """Integrate ``fun`` over [a, b], splitting panels exactly at ``breaks``."""
    if b <= a:
        return 0.0
    cuts = sorted({a, b, *(x for x in breaks if a < x < b)})
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        val, _ = integrate.quad(fun, lo, hi, epsrel=epsrel, epsabs=epsabs, limit=400)
        total += val
    return total


def quad_halfline(fun, breaks=(), scale=1.0, epsrel=1e-12, epsabs=0.0):
    """Integrate ``fun`` over [0, inf).

    The finite part is split at ``breaks`` and at a few multiples of ``scale``
    (a characteristic decay length) and, for long scales, at every decade
    below it so slowly decaying power-law heads are resolved; the remainder
    uses scipy's mapped infinite-interval rule.
    """
    scale = max(float(scale), 1e-8)
    anchors = [scale * m for m in (1.0, 4.0, 16.0)]
    anchors += [10.0**e for e in range(0, int(math.log10(scale)) + 1)] if scale > 10 else []
    cut = max([*anchors, *breaks])
    head = quad_interval(fun, 0.0, cut, breaks=[*breaks, *anchors], epsrel=epsrel, epsabs=epsabs)
    tail, _ = integrate.quad(fun, cut, math.inf, epsrel=epsrel, epsabs=epsabs, limit=400)
    return head + tail


def gauss_legendre_panels(edges, order=4):
    """Return (nodes, weights) of composite Gauss-Legendre rule on consecutive ``edges``.

    Output arrays have shape (len(edges) - 1, order).
    """
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.asarray(edges, dtype=float)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = mid[:, None] + half[:, None] * x[None, :]
    weights = half[:, None] * w[None, :]
    return nodes, weights
