import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from timeconsistent.discount import Exponential, Mixture, QuasiHyperbolic, TruncatedExponential
from timeconsistent.environment import MarketPath
from timeconsistent.errors import DivergenceError, DomainError
from timeconsistent.propensity import lambda_constant, lambda_exponential, lambda_mixture
from timeconsistent.trajectory import (
    budget_gap,
    equilibrium_capital_log,
    equilibrium_path,
    integrate_flow,
    naive_path,
    naive_propensity,
    optimal_propensity_log,
    precommitment_path,
    precommitment_path_log,
)

MIX = Mixture(0.5, 0.02, 0.10)


def log_capital_oracle(mass, r, w, k0, t):
    """k(t) = k0 e^{(r-1/H)t} + w (1 - 1/(rH)) / (r - 1/H) (e^{(r-1/H)t} - 1)."""
    a = r - 1.0 / mass
    return k0 * math.exp(a * t) + w * (1 - 1 / (r * mass)) / a * (math.exp(a * t) - 1)


def naive_oracle(h, r, gamma):
    """1 / ∫ h^{1/γ} e^{-r(γ-1)s/γ} by mpmath for the mixture family."""
    with mpmath.workdps(25):
        def integrand(s):
            hv = h.omega * mpmath.exp(-h.rho1 * s) + (1 - h.omega) * mpmath.exp(-h.rho2 * s)
            return hv ** (mpmath.mpf(1) / gamma) * mpmath.exp(-r * (gamma - 1) * s / gamma)

        return float(1 / mpmath.quad(integrand, [0, 50, 500, mpmath.inf]))


# ---------------------------------------------------------------------------
# integrate_flow
# ---------------------------------------------------------------------------

def test_consuming_output_keeps_capital_constant():
    market = MarketPath(0.04, 0.5)
    path = integrate_flow(lambda t, k: 0.5 + 0.04 * k, market, 0.0, 3.0, horizon=20, step=0.1)
    assert np.max(np.abs(path.capital - 3.0)) < 1e-12
    assert not path.truncated


@pytest.mark.parametrize("r,w,k0", [(0.06, 1.0, 10.0), (0.03, 0.0, 5.0), (0.045, 2.0, 0.0)])
def test_log_equilibrium_matches_closed_form(r, w, k0):
    path = equilibrium_path(MIX, r, w, k0, 1.0, horizon=60, step=0.01)
    exact = np.array([log_capital_oracle(30.0, r, w, k0, t) for t in path.times])
    assert np.max(np.abs(path.capital - exact)) < 1e-6
    assert np.max(np.abs(equilibrium_capital_log(MIX, r, w, k0, path.times) - exact)) < 1e-9


def test_log_capital_at_stationary_rate_is_linear_limit():
    # r = 1/H: dk/dt = w (1 - 1/(rH)) = 0 so capital stays put
    h = Exponential(0.05)
    assert equilibrium_capital_log(h, 0.05, 1.0, 7.0, 12.0) == pytest.approx(7.0, rel=1e-14)
    near = equilibrium_capital_log(h, 0.05 + 1e-13, 1.0, 7.0, 12.0)
    assert near == pytest.approx(7.0, rel=1e-9)


@given(split=st.integers(1, 399), k0=st.floats(0.5, 50.0))
@settings(max_examples=30, deadline=None)
def test_flow_semigroup(split, k0):
    market = MarketPath(0.05, 1.0)
    lam = lambda_constant(MIX, 0.05, 2.0).lam

    def policy(t, k):
        return lam * (k + 20.0)

    step = 0.05
    whole = integrate_flow(policy, market, 0.0, k0, horizon=20.0, step=step)
    t1 = whole.times[split]
    first = integrate_flow(policy, market, 0.0, k0, horizon=t1, step=step)
    second = integrate_flow(policy, market, t1, first.capital[-1], horizon=20.0 - t1, step=step)
    assert abs(second.capital[-1] - whole.capital[-1]) < 1e-8 * max(1.0, abs(whole.capital[-1]))


def test_rk4_fourth_order():
    r, w, k0 = 0.06, 1.0, 10.0
    lam = 1.0 / 30.0

    def policy(t, k):
        return lam * (k + w / r)

    market = MarketPath(r, w)
    errs = []
    for step in (2.0, 1.0):
        path = integrate_flow(policy, market, 0.0, k0, horizon=40, step=step)
        errs.append(abs(path.capital[-1] - log_capital_oracle(30.0, r, w, k0, 40.0)))
    assert 12 < errs[0] / errs[1] < 20


def test_truncation_flag_when_capital_runs_out():
    market = MarketPath(0.03)
    path = integrate_flow(lambda t, k: 1.0, market, 0.0, 2.0, horizon=10, step=0.1)
    assert path.truncated
    assert path.times[-1] < 10
    assert np.all(path.capital > 0)


def test_bad_step_raises():
    with pytest.raises(DomainError):
        integrate_flow(lambda t, k: 1.0, MarketPath(0.03), 0.0, 1.0, step=0.0)


# ---------------------------------------------------------------------------
# log utility: precommitment and optimal propensity
# ---------------------------------------------------------------------------

def test_precommitment_equals_equilibrium_for_exponential():
    h = Exponential(0.04)
    pre = precommitment_path_log(h, 0.06, 1.0, 10.0, horizon=60, step=0.01)
    eq = equilibrium_path(h, 0.06, 1.0, 10.0, 1.0, horizon=60, step=0.01)
    assert np.array_equal(pre.times, eq.times)
    assert np.max(np.abs(pre.consumption - eq.consumption)) < 1e-8
    assert np.max(np.abs(pre.capital - eq.capital)) < 1e-8


def test_precommitment_diverges_from_equilibrium_for_mixture():
    pre = precommitment_path_log(MIX, 0.06, 1.0, 10.0)
    eq = equilibrium_path(MIX, 0.06, 1.0, 10.0, 1.0)
    assert pre.consumption[0] == pytest.approx(eq.consumption[0], rel=1e-12)
    assert np.max(np.abs(pre.consumption - eq.consumption)) > 1e-4


def test_precommitment_initial_consumption():
    pre = precommitment_path_log(MIX, 0.06, 1.0, 10.0)
    assert pre.consumption[0] == pytest.approx((10.0 + 1.0 / 0.06) / 30.0, rel=1e-12)
    assert pre.capital[0] == pytest.approx(10.0, rel=1e-12)
    # the plan's initial propensity coincides with the equilibrium one
    assert pre.consumption[0] / (10.0 + 1.0 / 0.06) == pytest.approx(lambda_constant(MIX, 0.06, 1.0).lam, rel=1e-12)


def test_precommitment_needs_rate_above_inverse_mass():
    with pytest.raises(DomainError):
        precommitment_path_log(MIX, 1.0 / 30.0, 1.0, 10.0)
    with pytest.raises(DomainError):
        precommitment_path_log(MIX, 0.02, 1.0, 10.0)


@given(t=st.floats(0.0, 100.0))
@settings(max_examples=30, deadline=None)
def test_optimal_propensity_memoryless(t):
    assert optimal_propensity_log(Exponential(0.07), t) == pytest.approx(0.07, rel=1e-12)


def test_optimal_propensity_mixture_at_zero():
    assert optimal_propensity_log(MIX, 0.0) == pytest.approx(1.0 / 30.0, rel=1e-13)


def test_optimal_propensity_slope_at_zero():
    dt = 1e-5
    slope = (optimal_propensity_log(MIX, dt) - optimal_propensity_log(MIX, 0.0)) / dt
    h0 = float(MIX.h_prime(0.0))
    assert slope == pytest.approx((h0 + 1 / 30.0) / 30.0, rel=1e-4)


def test_optimal_propensity_past_cutoff_raises():
    with pytest.raises(DomainError):
        optimal_propensity_log(TruncatedExponential(0.05, 3.0), 4.0)


# ---------------------------------------------------------------------------
# naive propensity
# ---------------------------------------------------------------------------

@pytest.mark.parametrize(
    "h", [MIX, Exponential(0.05), QuasiHyperbolic(0.05, 1.0, 0.7), TruncatedExponential(0.04, 20.0)]
)
def test_naive_equals_equilibrium_for_log(h):
    assert naive_propensity(h, 0.05, 1.0) == lambda_constant(h, 0.05, 1.0).lam


@given(rho=st.floats(0.01, 0.2), r=st.floats(0.01, 0.1), gamma=st.floats(0.3, 5.0))
@settings(max_examples=40, deadline=None)
def test_naive_exponential_matches_closed_form(rho, r, gamma):
    if rho - r * (1 - gamma) <= 1e-3:
        return
    expected = lambda_exponential(rho, r, gamma).lam
    assert naive_propensity(Exponential(rho), r, gamma) == pytest.approx(expected, rel=1e-9)


@pytest.mark.parametrize("gamma", [0.8, 2.0, 4.0])
def test_naive_mixture_matches_quadrature_oracle(gamma):
    assert naive_propensity(MIX, 0.06, gamma) == pytest.approx(naive_oracle(MIX, 0.06, gamma), rel=1e-10)


def test_naive_differs_from_equilibrium_for_mixture():
    naive = naive_propensity(MIX, 0.06, 2.0)
    equilibrium = lambda_mixture(0.5, 0.02, 0.10, 0.06, 2.0).lam
    assert abs(naive - equilibrium) > 1e-4


def test_naive_divergent_budget_integral():
    with pytest.raises(DivergenceError):
        naive_propensity(Exponential(0.01), 0.1, 0.5)


# ---------------------------------------------------------------------------
# budget feasibility
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("gamma", [1.0, 2.0, 0.7])
def test_every_path_is_budget_feasible(gamma):
    market = MarketPath(0.06, 1.0)
    for build in (equilibrium_path, precommitment_path, naive_path):
        path = build(MIX, 0.06, 1.0, 10.0, gamma, 60.0, 0.01)
        assert abs(budget_gap(path, market)) < 1e-4, build.__name__


def test_precommitment_jump_discount_drops_consumption_at_kink():
    h = QuasiHyperbolic(0.05, 2.0, 0.6)
    path = precommitment_path(h, 0.06, 1.0, 10.0, 2.0, 60.0, 0.01)
    cut = int(np.searchsorted(path.times, 2.0))
    assert path.times[cut] == 2.0
    # h takes its left value at the kink, so the drop comes right after it
    ratio = path.consumption[cut + 1] / path.consumption[cut]
    dt = path.times[cut + 1] - path.times[cut]
    assert ratio == pytest.approx(math.sqrt(0.6) * math.exp((0.06 - 0.05) * dt / 2.0), rel=1e-12)
    # past the kink consumption is smooth, so the budget identity holds on that piece
    tail = type(path)(path.times[cut + 1:], path.capital[cut + 1:], path.consumption[cut + 1:], "precommitment")
    assert abs(budget_gap(tail, MarketPath(0.06, 1.0))) < 1e-4
