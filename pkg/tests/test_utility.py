import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from timeconsistent.errors import DomainError
from timeconsistent.utility import UtilitySpec, i, u, u_prime, u_tilde, u_tilde_prime

gammas = st.floats(0.2, 6.0).filter(lambda g: abs(g - 1) > 1e-3) | st.just(1.0)


def conjugate_by_search(spec, x):
    """max_c u(c) - x c by golden-section search on log c around the maximiser."""
    guess = math.log(x ** (-1.0 / spec.gamma))
    res = minimize_scalar(
        lambda z: -(spec.u(math.exp(z)) - x * math.exp(z)),
        bracket=(guess - 2.0, guess + 0.3, guess + 2.0),
        method="golden",
        tol=1e-12,
    )
    return -res.fun


def test_log_inverse_marginal():
    assert i(UtilitySpec(1.0), 2.0) == 0.5


def test_crra_conjugate_value():
    spec = UtilitySpec(2.0)
    assert u_tilde(spec, 4.0) == pytest.approx(-4.0, rel=1e-15)
    assert conjugate_by_search(spec, 4.0) == pytest.approx(-4.0, abs=1e-9)


def test_crra_conjugate_derivative():
    spec = UtilitySpec(2.0)
    assert u_tilde_prime(spec, 4.0) == pytest.approx(-0.5, rel=1e-15)
    eps = 1e-6
    fd = (spec.u_tilde(4.0 + eps) - spec.u_tilde(4.0 - eps)) / (2 * eps)
    assert fd == pytest.approx(-0.5, abs=1e-8)


def test_log_conjugate():
    spec = UtilitySpec(1.0)
    for x in (0.1, 1.0, 7.5):
        assert spec.u_tilde(x) == pytest.approx(-math.log(x) - 1.0, rel=1e-15)


@pytest.mark.parametrize("fn", [u, u_prime])
@pytest.mark.parametrize("bad", [0.0, -1.0, float("nan")])
def test_non_positive_consumption_rejected(fn, bad):
    with pytest.raises(DomainError):
        fn(UtilitySpec(2.0), bad)


@pytest.mark.parametrize("fn", [i, u_tilde, u_tilde_prime])
def test_non_positive_marginal_rejected(fn):
    with pytest.raises(DomainError):
        fn(UtilitySpec(0.5), 0.0)


def test_non_positive_gamma_rejected():
    with pytest.raises(DomainError):
        UtilitySpec(0.0)


def test_vectorised_evaluation():
    spec = UtilitySpec(3.0)
    c = np.array([0.5, 1.0, 2.0])
    assert np.allclose(spec.u(c), c ** -2 / -2)
    assert np.allclose(spec.i(spec.u_prime(c)), c)


def test_conjugate_matches_grid_maximum_random():
    rng = np.random.default_rng(3)
    for _ in range(50):
        gamma = float(rng.choice([1.0, rng.uniform(0.3, 5.0)]))
        spec = UtilitySpec(gamma)
        x = float(rng.uniform(0.2, 5.0))
        c_star = spec.i(x)
        grid = c_star * np.linspace(0.5, 1.5, 200001)
        best = float(np.max(spec.u(grid) - x * grid))
        assert spec.u_tilde(x) == pytest.approx(best, abs=1e-6)


@settings(max_examples=60, deadline=None)
@given(gamma=gammas, c=st.floats(1e-3, 1e3))
def test_inverse_marginal_round_trip(gamma, c):
    spec = UtilitySpec(gamma)
    assert spec.i(spec.u_prime(c)) == pytest.approx(c, rel=1e-12)
    assert spec.u_prime(spec.i(c)) == pytest.approx(c, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(gamma=gammas, x=st.floats(1e-2, 1e2))
def test_conjugate_identity(gamma, x):
    spec = UtilitySpec(gamma)
    c = spec.i(x)
    assert spec.u_tilde(x) == pytest.approx(spec.u(c) - x * c, rel=1e-12, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(gamma=gammas, x=st.floats(0.05, 20.0))
def test_conjugate_derivative_is_minus_inverse(gamma, x):
    spec = UtilitySpec(gamma)
    eps = 1e-6 * x
    fd = (spec.u_tilde(x + eps) - spec.u_tilde(x - eps)) / (2 * eps)
    assert fd == pytest.approx(spec.u_tilde_prime(x), rel=1e-6, abs=1e-6)


@settings(max_examples=60, deadline=None)
@given(gamma=gammas, c1=st.floats(1e-2, 1e2), c2=st.floats(1e-2, 1e2), theta=st.floats(0.0, 1.0))
def test_concavity(gamma, c1, c2, theta):
    spec = UtilitySpec(gamma)
    lhs = spec.u(theta * c1 + (1 - theta) * c2)
    rhs = theta * spec.u(c1) + (1 - theta) * spec.u(c2)
    assert lhs >= rhs - 1e-12 * max(1.0, abs(rhs))
    assert spec.u_double_prime(c1) < 0
