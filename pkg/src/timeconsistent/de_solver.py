"""Finite-horizon solver for the nonlocal equilibrium equations.

The value of an equilibrium policy σ = i(∂V/∂k) satisfies the integrated
equation

    V(t,k) = ∫_t^T h(s-t) u(σ(s, K(s,t,k))) ds + h(T-t) g(K(T,t,k)),

where K is the capital flow under σ. :func:`solve_ie` finds V by Picard
iteration on this identity: integrate the flow from every grid node, evaluate
the right-hand side, differentiate in k and update σ.

Flows are advanced with RK4 at the t-grid spacing (or a fraction of it); the
policy between nodes is interpolated linearly in k and in t. Flows that leave
the capital window see the policy clamped to the window edge, and their
starting node is flagged as tainted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._quadrature import quad_halfline
from .discount import DiscountSpec, Exponential
from .errors import ConvergenceError, DiagnosticError, DomainError, WindowViolation
from .propensity import lambda_constant
from .utility import UtilitySpec


@dataclass(frozen=True)
class DEGrid:
    """Uniform n_t x n_k intervals on [0, T] x [k_lo, k_hi]."""

    T: float
    n_t: int
    k_lo: float
    k_hi: float
    n_k: int

    def __post_init__(self):
        if not self.T > 0 or self.n_t < 2 or self.n_k < 4 or not self.k_hi > self.k_lo:
            raise DomainError(
                "de_solver: need T > 0, n_t >= 2, n_k >= 4 and k_hi > k_lo"
            )

    @property
    def t_grid(self):
        return np.linspace(0.0, self.T, self.n_t + 1)

    @property
    def k_grid(self):
        return np.linspace(self.k_lo, self.k_hi, self.n_k + 1)

    @property
    def dt(self):
        return self.T / self.n_t

    @property
    def dk(self):
        return (self.k_hi - self.k_lo) / self.n_k

    def to_json(self):
        return {"T": self.T, "n_t": self.n_t, "k_lo": self.k_lo, "k_hi": self.k_hi, "n_k": self.n_k}


@dataclass(frozen=True)
class TerminalUtility:
    """g(k) = scale · u_γ(k + shift) + offset."""

    gamma: float
    scale: float = 1.0
    shift: float = 0.0
    offset: float = 0.0

    @property
    def _u(self):
        return UtilitySpec(self.gamma)

    def __call__(self, k):
        return self.scale * self._u.u(np.asarray(k) + self.shift) + self.offset

    def prime(self, k):
        return self.scale * self._u.u_prime(np.asarray(k) + self.shift)

    @classmethod
    def stationary(cls, h: DiscountSpec, r, w, gamma):
        """Value of the constant-propensity equilibrium with constant r and w.

        γ != 1: λ^{-γ} u(k + w/r). γ = 1: H ln(λ(k + w/r)) + (r - λ) ∫ s h(s) ds
        with λ = 1/H.
        """
        shift = w / r
        if gamma != 1:
            lam = lambda_constant(h, r, gamma).lam
            return cls(gamma, lam ** (-gamma), shift, 0.0)
        mass = h.total_mass()
        lam = 1.0 / mass

        def first_moment(s):
            log_h = h._log_h(s)
            return s * math.exp(log_h) if log_h > -math.inf else 0.0

        moment = quad_halfline(first_moment, breaks=h.kinks, scale=mass, epsrel=1e-12)
        return cls(1.0, mass, shift, mass * math.log(lam) + (r - lam) * moment)

    def to_json(self):
        return {"gamma": self.gamma, "scale": self.scale, "shift": self.shift, "offset": self.offset}


@dataclass
class ValueGrid:
    t_grid: np.ndarray
    k_grid: np.ndarray
    V: np.ndarray
    sigma: np.ndarray
    g_terminal: object
    tainted: np.ndarray
    iterations: int = 0
    history: list = field(default_factory=list)

    @property
    def dt(self):
        return self.t_grid[1] - self.t_grid[0]

    @property
    def dk(self):
        return self.k_grid[1] - self.k_grid[0]

    @property
    def grid(self):
        return DEGrid(
            float(self.t_grid[-1]), len(self.t_grid) - 1,
            float(self.k_grid[0]), float(self.k_grid[-1]), len(self.k_grid) - 1,
        )

    def V_k(self):
        return np.gradient(self.V, self.dk, axis=1, edge_order=2)

    def V_t(self):
        return np.gradient(self.V, self.dt, axis=0, edge_order=2)

    def node(self, t, k):
        """Grid indices of the node at (t, k); raises if (t, k) is off-grid."""
        i = int(round(t / self.dt))
        j = int(round((k - self.k_grid[0]) / self.dk))
        if not (0 <= i < len(self.t_grid) and 0 <= j < len(self.k_grid)):
            raise DomainError(f"de_solver: ({t}, {k}) lies outside the grid")
        if abs(self.t_grid[i] - t) > 1e-9 * max(1, abs(t)) or abs(self.k_grid[j] - k) > 1e-9 * max(1, abs(k)):
            raise DomainError(f"de_solver: ({t}, {k}) is not a grid node")
        return i, j


# ---------------------------------------------------------------------------
# flow marching
# ---------------------------------------------------------------------------

class _Policy:
    """σ(t, k): linear in k on each slice, linear in t between slices, clamped in k."""

    def __init__(self, t_grid, k_grid, sigma):
        self.t_grid, self.k_grid, self.sigma = t_grid, k_grid, sigma
        self.dt = t_grid[1] - t_grid[0]
        self.dk = k_grid[1] - k_grid[0]
        self.slope = np.diff(sigma, axis=1) / self.dk

    def _locate_t(self, t):
        x = t / self.dt
        m = min(int(math.floor(x + 1e-9)), len(self.t_grid) - 2)
        m = max(m, 0)
        return m, min(max(x - m, 0.0), 1.0)

    def __call__(self, t, k):
        m, theta = self._locate_t(t)
        lo = np.interp(k, self.k_grid, self.sigma[m])
        if theta == 0.0:
            return lo
        return (1 - theta) * lo + theta * np.interp(k, self.k_grid, self.sigma[m + 1])

    def slope_at(self, t, k):
        """k-derivative of the interpolant (0 outside the window)."""
        m, theta = self._locate_t(t)
        cell = np.clip(((np.asarray(k) - self.k_grid[0]) // self.dk).astype(int), 0, len(self.k_grid) - 2)
        inside = (np.asarray(k) >= self.k_grid[0]) & (np.asarray(k) <= self.k_grid[-1])
        val = (1 - theta) * self.slope[m][cell] + theta * self.slope[min(m + 1, len(self.t_grid) - 1)][cell]
        return np.where(inside, val, 0.0)


def _env_f(env, t, k):
    return np.asarray(env.f(t, k), dtype=float) + 0.0 * np.asarray(k)


def _env_fk(env, t, k):
    return np.asarray(env.f_k(t, k), dtype=float) + 0.0 * np.asarray(k)


class _Marcher:
    """Lock-step RK4 integration of many flows that start at different grid times."""

    def __init__(self, t_grid, k_grid, sigma, env):
        self.policy = _Policy(t_grid, k_grid, sigma)
        self.t_grid, self.k_grid, self.env = t_grid, k_grid, env
        self.T = t_grid[-1]
        self.dt = t_grid[1] - t_grid[0]

    def drift(self, t, k):
        return _env_f(self.env, t, k) - self.policy(t, k)

    @staticmethod
    def _snap(lag, kinks):
        """Put lags that should equal a jump time exactly on it."""
        lag = np.asarray(lag, dtype=float)
        for kink in kinks:
            lag = np.where(np.abs(lag - kink) < 1e-9 * max(kink, 1.0), kink, lag)
        return lag

    def outside(self, k):
        return (k < self.k_grid[0] - 1e-12) | (k > self.k_grid[-1] + 1e-12)

    def march(self, start, k0, h: DiscountSpec, u: UtilitySpec, g, substeps=1,
              derivative=False, record=False):
        """Integrate flows starting at grid indices ``start`` with capital ``k0``.

        Returns a dict with ``value`` (the right-hand side of the integrated
        equation), ``K_T``, ``tainted`` and, on request, ``dvalue`` (the
        h'-weighted analogue including jump terms) and the sampled path.
        """
        start = np.asarray(start, dtype=int)
        k = np.asarray(k0, dtype=float).copy()
        n = k.size
        delta = self.dt / substeps
        t_start = (start * substeps) * delta
        n_fine = (len(self.t_grid) - 1) * substeps
        value = np.zeros(n)
        dvalue = np.zeros(n)
        tainted = self.outside(k)
        jumps = h.jumps() if derivative else []
        path = {"t": [], "K": [], "sigma": []} if record else None
        first = int(start.min()) * substeps

        for q in range(first, n_fine):
            a = q * delta
            b = a + delta
            act = start * substeps <= q
            if not act.any():
                continue
            kk = k[act]
            ts = t_start[act]
            d0 = self.drift(a, kk)
            k1 = d0
            k2 = self.drift(a + delta / 2, kk + delta / 2 * k1)
            k3 = self.drift(a + delta / 2, kk + delta / 2 * k2)
            k4 = self.drift(b, kk + delta * k3)
            k_new = kk + delta / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            d1 = self.drift(b, k_new)
            k_mid = 0.5 * (kk + k_new) + delta / 8 * (d0 - d1)
            s0 = self.policy(a, kk)
            sm = self.policy(a + delta / 2, k_mid)
            s1 = self.policy(b, k_new)
            for arr in (kk + delta / 2 * k1, kk + delta / 2 * k2, kk + delta * k3, k_mid, k_new):
                tainted[act] |= self.outside(arr)
            steps = q - start[act] * substeps
            lag0 = self._snap(steps * delta, h.kinks)
            lagm = (steps + 0.5) * delta
            lag1 = self._snap((steps + 1) * delta, h.kinks)
            u0, um, u1 = u.u(s0), u.u(sm), u.u(s1)
            value[act] += delta / 6 * (
                h.h(lag0, side="right") * u0 + 4 * h.h(lagm) * um + h.h(lag1) * u1
            )
            if derivative:
                dvalue[act] += delta / 6 * (
                    h.h_prime(lag0, side="right") * u0 + 4 * h.h_prime(lagm, side="left") * um
                    + h.h_prime(lag1, side="left") * u1
                )
                for tau, jump in jumps:
                    hit = (lag0 <= tau) & (tau < lag1) & (ts + tau < self.T)
                    if hit.any():
                        theta = (tau - lag0[hit]) / delta
                        kj = _hermite(kk[hit], k_new[hit], d0[hit], d1[hit], delta, theta)
                        idx = np.flatnonzero(act)[hit]
                        for th in np.unique(theta):
                            same = theta == th
                            dvalue[idx[same]] += jump * u.u(self.policy(a + th * delta, kj[same]))
            if record:
                if not path["t"]:
                    path["t"].append(a)
                    path["K"].append(kk.copy())
                    path["sigma"].append(s0)
                path["t"].append(b)
                path["K"].append(k_new.copy())
                path["sigma"].append(s1)
            k[act] = k_new

        lag_T = self._snap((n_fine - start * substeps) * delta, h.kinks)
        weight_T = np.asarray(h.h(lag_T), dtype=float)
        g_T = np.zeros(n)
        live = weight_T != 0
        g_T[live] = g(k[live])
        out = {"value": value + weight_T * g_T, "K_T": k, "tainted": tainted}
        if derivative:
            out["dvalue"] = dvalue + h.h_prime(lag_T, side="left") * g_T
        if record:
            out["path"] = {key: np.asarray(v) for key, v in path.items()}
        return out


def _hermite(k0, k1, d0, d1, delta, theta):
    t2, t3 = theta * theta, theta * theta * theta
    return (
        (2 * t3 - 3 * t2 + 1) * k0 + (t3 - 2 * t2 + theta) * delta * d0
        + (-2 * t3 + 3 * t2) * k1 + (t3 - t2) * delta * d1
    )


def _all_nodes(n_t, n_k):
    start = np.repeat(np.arange(n_t + 1), n_k + 1)
    return start


def _sweep(grid: DEGrid, sigma, h, u, env, g, substeps=1):
    t_grid, k_grid = grid.t_grid, grid.k_grid
    marcher = _Marcher(t_grid, k_grid, sigma, env)
    start = _all_nodes(grid.n_t, grid.n_k)
    k0 = np.tile(k_grid, grid.n_t + 1)
    out = marcher.march(start, k0, h, u, g, substeps)
    shape = (grid.n_t + 1, grid.n_k + 1)
    return out["value"].reshape(shape), out["tainted"].reshape(shape)


def _policy_from_value(V, dk, u: UtilitySpec):
    V_k = np.gradient(V, dk, axis=1, edge_order=2)
    if np.any(~(V_k > 0)):
        raise ConvergenceError("de_solver: ∂V/∂k must stay > 0 to define the policy i(∂V/∂k)")
    return u.i(V_k)


# ---------------------------------------------------------------------------
# classical HJB (exponential discount), used for warm starts and checks
# ---------------------------------------------------------------------------

def solve_hjb(rho, u: UtilitySpec, env, g, grid: DEGrid, cfl=0.5) -> ValueGrid:
    """Backward method of lines for V_t - ρV + ũ(V_k) + V_k f = 0, V(T) = g.

    Central differences in k (second-order one-sided at the edges) and RK4 in
    time, with enough substeps per t-interval to keep the advection CFL number
    below ``cfl``.
    """
    t_grid, k_grid = grid.t_grid, grid.k_grid
    dk = grid.dk
    V = np.empty((grid.n_t + 1, grid.n_k + 1))
    V[-1] = g(k_grid)

    def rhs(t, v):
        vk = np.gradient(v, dk, edge_order=2)
        if np.any(~(vk > 0)):
            raise ConvergenceError("de_solver: HJB lost monotonicity in k")
        return -rho * v + u.u_tilde(vk) + vk * _env_f(env, t, k_grid)

    for n in range(grid.n_t, 0, -1):
        v = V[n].copy()
        vk = np.gradient(v, dk, edge_order=2)
        speed = np.max(np.abs(_env_f(env, t_grid[n], k_grid) - u.i(vk)))
        sub = max(1, int(math.ceil(grid.dt * speed / (cfl * dk))))
        step = grid.dt / sub
        t = t_grid[n]
        for _ in range(sub):
            # backward in t: dv/dτ = rhs with τ = T - t
            a1 = rhs(t, v)
            a2 = rhs(t - step / 2, v + step / 2 * a1)
            a3 = rhs(t - step / 2, v + step / 2 * a2)
            a4 = rhs(t - step, v + step * a3)
            v = v + step / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
            t -= step
        V[n - 1] = v
    sigma = _policy_from_value(V, dk, u)
    return ValueGrid(t_grid, k_grid, V, sigma, g, np.zeros_like(V, dtype=bool))


# ---------------------------------------------------------------------------
# Picard iteration on the integrated equation
# ---------------------------------------------------------------------------

def solve_ie(
    h: DiscountSpec,
    u: UtilitySpec,
    env,
    g,
    grid: DEGrid,
    tol=1e-6,
    damping=1.0,
    max_iter=200,
    strict=False,
    initial=None,
) -> ValueGrid:
    """Picard iteration V -> σ = i(V_k) -> V on the integrated equation.

    Stops when the sup-change of σ between sweeps drops below ``tol``. The
    returned σ is exactly i(V_k) of the returned V. With ``strict=True`` any
    flow leaving the capital window raises :class:`WindowViolation`;
    otherwise the affected starting nodes are reported in ``tainted``.
    """
    if not 0 < damping <= 1:
        raise DomainError(f"de_solver: damping must lie in (0, 1], got {damping}")
    if initial is None:
        rho0 = float(h.inst_rate(0.0))
        sigma = solve_hjb(rho0, u, env, g, grid).sigma
    else:
        sigma = np.asarray(initial, dtype=float)
    history = []
    for it in range(1, max_iter + 1):
        V, tainted = _sweep(grid, sigma, h, u, env, g)
        if strict and tainted.any():
            i, j = np.argwhere(tainted)[0]
            raise WindowViolation(
                f"de_solver: flow from node (t={grid.t_grid[i]:.6g}, k={grid.k_grid[j]:.6g}) "
                "leaves the capital window"
            )
        new_sigma = _policy_from_value(V, grid.dk, u)
        change = float(np.max(np.abs(new_sigma - sigma)))
        history.append(change)
        if change < tol:
            return ValueGrid(grid.t_grid, grid.k_grid, V, new_sigma, g, tainted, it, history)
        sigma = (1 - damping) * sigma + damping * new_sigma
    raise ConvergenceError(
        f"de_solver: no convergence in {max_iter} sweeps (last change {history[-1]:.3e})", history
    )


# ---------------------------------------------------------------------------
# diagnostics on a solved grid
# ---------------------------------------------------------------------------

def _flow_from_node(vg: ValueGrid, h, u, env, i, k, substeps=1, derivative=False, record=False):
    marcher = _Marcher(vg.t_grid, vg.k_grid, vg.sigma, env)
    return marcher.march(np.array([i]), np.array([float(k)]), h, u, vg.g_terminal,
                         substeps, derivative, record)


def ie_residual(vg: ValueGrid, h, u, env, substeps=4):
    """|V - RHS of the integrated equation| per node, flows on a finer step."""
    V, _ = _sweep(vg.grid, vg.sigma, h, u, env, vg.g_terminal, substeps)
    return np.abs(vg.V - V)


def de_residual(vg: ValueGrid, h, u, env, t, k, substeps=1):
    """Left side of the differentiated equation at an interior node.

    When h jumps at τ, V jumps in t at t = T - τ; nodes whose V_t stencil
    straddles that time carry an O(1/dt) residual by construction.
    """
    i, j = vg.node(t, k)
    if not (0 < i < len(vg.t_grid) - 1 and 0 < j < len(vg.k_grid) - 1):
        raise DomainError(f"de_solver: de_residual needs an interior node, got ({t}, {k})")
    V_t = (vg.V[i + 1, j] - vg.V[i - 1, j]) / (2 * vg.dt)
    V_k = (vg.V[i, j + 1] - vg.V[i, j - 1]) / (2 * vg.dk)
    flow = _flow_from_node(vg, h, u, env, i, vg.k_grid[j], substeps, derivative=True)
    f_val = float(_env_f(env, vg.t_grid[i], vg.k_grid[j]))
    return float(V_t + flow["dvalue"][0] + u.u_tilde(V_k) + V_k * f_val)


def de_residual_grid(vg: ValueGrid, h, u, env, substeps=1):
    """:func:`de_residual` at every interior node at once; NaN on the boundary."""
    n_t, n_k = len(vg.t_grid) - 1, len(vg.k_grid) - 1
    ii, jj = np.meshgrid(np.arange(1, n_t), np.arange(1, n_k), indexing="ij")
    marcher = _Marcher(vg.t_grid, vg.k_grid, vg.sigma, env)
    flow = marcher.march(ii.ravel(), vg.k_grid[jj.ravel()], h, u, vg.g_terminal, substeps, derivative=True)
    V = vg.V
    V_t = (V[2:, 1:-1] - V[:-2, 1:-1]) / (2 * vg.dt)
    V_k = (V[1:-1, 2:] - V[1:-1, :-2]) / (2 * vg.dk)
    f_val = np.array([_env_f(env, t, vg.k_grid[1:-1]) for t in vg.t_grid[1:-1]])
    out = np.full(V.shape, np.nan)
    out[1:-1, 1:-1] = V_t + flow["dvalue"].reshape(V_t.shape) + u.u_tilde(V_k) + V_k * f_val
    return out


def hjb_residual(vg: ValueGrid, rho, u, env, t, k):
    """V_t - ρV + ũ(V_k) + V_k f at an interior node (same stencils as de_residual)."""
    i, j = vg.node(t, k)
    V_t = (vg.V[i + 1, j] - vg.V[i - 1, j]) / (2 * vg.dt)
    V_k = (vg.V[i, j + 1] - vg.V[i, j - 1]) / (2 * vg.dk)
    f_val = float(_env_f(env, vg.t_grid[i], vg.k_grid[j]))
    return float(V_t - rho * vg.V[i, j] + u.u_tilde(V_k) + V_k * f_val)


@dataclass(frozen=True)
class ResolventPath:
    times: np.ndarray
    values: np.ndarray
    capital: np.ndarray


def resolvent(vg: ValueGrid, env, t, k, s=None, substeps=1) -> ResolventPath:
    """dR/ds = (f_k - σ_k) R, R(t) = 1, along the flow from (t, k).

    σ_k is the slope of the piecewise-linear policy interpolant, so R is the
    exact k-sensitivity of the discrete flow.
    """
    T = vg.t_grid[-1]
    s = T if s is None else s
    if not t <= s <= T + 1e-12:
        raise DomainError(f"de_solver: resolvent needs t <= s <= T, got t={t}, s={s}")
    policy = _Policy(vg.t_grid, vg.k_grid, vg.sigma)
    i = int(round(t / vg.dt))
    if abs(vg.t_grid[i] - t) > 1e-9 * max(1.0, t):
        raise DomainError("de_solver: resolvent must start on a grid time")
    delta = vg.dt / substeps

    def rhs(time, state):
        kk, rr = state
        drift = float(_env_f(env, time, kk) - policy(time, kk))
        rate = float(_env_fk(env, time, kk) - policy.slope_at(time, kk))
        return np.array([drift, rate * rr])

    times, caps, vals = [t], [float(k)], [1.0]
    state = np.array([float(k), 1.0])
    time = t
    n_steps = int(round((s - t) / delta))
    for _ in range(n_steps):
        a1 = rhs(time, state)
        a2 = rhs(time + delta / 2, state + delta / 2 * a1)
        a3 = rhs(time + delta / 2, state + delta / 2 * a2)
        a4 = rhs(time + delta, state + delta * a3)
        state = state + delta / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
        time += delta
        times.append(time)
        caps.append(state[0])
        vals.append(state[1])
    return ResolventPath(np.asarray(times), np.asarray(vals), np.asarray(caps))


def flow_capital(vg: ValueGrid, env, t, k, substeps=1):
    """Capital path of the flow from (t, k), same integrator as :func:`resolvent`."""
    path = _flow_from_node(vg, Exponential(1.0), UtilitySpec(1.0), env, int(round(t / vg.dt)), k,
                           substeps, record=True)["path"]
    return path["t"], path["K"][:, 0]


def marginal_value_along_flow(vg: ValueGrid, h, u, env, t, k, substeps=1):
    """∫_t^T h(s-t) u'(σ) σ_k R ds + h(T-t) g'(K_T) R(T) by Simpson along the flow."""
    res = resolvent(vg, env, t, k, substeps=2 * substeps)
    times, R, K = res.times, res.values, res.capital
    policy = _Policy(vg.t_grid, vg.k_grid, vg.sigma)
    # Simpson over pairs of half-steps
    lag = times - t
    sig = np.array([policy(x, y) for x, y in zip(times, K)])
    slope = np.array([policy.slope_at(x, y) for x, y in zip(times, K)])
    hv = np.asarray(h.h(lag))
    hv[0] = float(h.h(0.0, side="right"))
    integrand = hv * u.u_prime(sig) * slope * R
    width = times[2::2] - times[:-2:2]
    integral = float(np.sum(width / 6 * (integrand[:-2:2] + 4 * integrand[1:-1:2] + integrand[2::2])))
    T = vg.t_grid[-1]
    return integral + float(h.h(T - t)) * float(vg.g_terminal.prime(K[-1])) * R[-1]


def p1_payoff(vg: ValueGrid, h, u, env, t, k, c, tol=1e-4, substeps=1):
    """Deviation payoff P1(t, k, σ, c) by two routes; raises if they disagree.

    Route 1 expands through the resolvent along the flow; route 2 uses the
    envelope relation ∂V/∂k = u'(σ). Concavity of u makes P1 <= 0.
    """
    i, j = vg.node(t, k)
    sig = vg.sigma[i, j]
    bracket = marginal_value_along_flow(vg, h, u, env, t, k, substeps)
    direct = u.u(c) - u.u(sig) + bracket * (sig - c)
    reduced = u.u(c) - u.u(sig) - u.u_prime(sig) * (c - sig)
    if abs(direct - reduced) > tol * max(1.0, abs(reduced)):
        raise DiagnosticError(
            f"de_solver: P1 routes disagree at ({t}, {k}): {direct} vs {reduced}; grid not converged"
        )
    return float(reduced), float(direct)


def effective_discount_rate(vg: ValueGrid, h, u, env, t, k, substeps=1):
    """-(∫ h' u + h'(T-t) g) / (∫ h u + h(T-t) g) along the flow from (t, k)."""
    i, j = vg.node(t, k)
    flow = _flow_from_node(vg, h, u, env, i, vg.k_grid[j], substeps, derivative=True)
    value = flow["value"][0]
    if value == 0:
        raise ZeroDivisionError("de_solver: effective discount rate undefined where V = 0")
    return float(-flow["dvalue"][0] / value)
