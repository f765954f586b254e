"""Command-line front end: validate a JSON config, run one solver, write CSV + JSON.

Exit status 0 on success, 1 on configuration errors (nothing is written), 2
when a solver fails to converge or finds no equilibrium (only the JSON sidecar
is written, with the residual history when there is one).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import de_solver, propensity, recursion, steady_state, trajectory
from .config import ConfigError, RunConfig
from .environment import CobbDouglas, Constant, MarketPath
from .errors import (
    ConvergenceError,
    DiagnosticError,
    DivergenceError,
    DomainError,
    NoEquilibriumError,
    WindowViolation,
)

COMMANDS = ("lambda", "recursion", "paths", "steady-state", "de-solve", "de-check")
THREADS_ENV = "TIMECONSISTENT_THREADS"
EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2


class SolverFailure(Exception):
    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def _write_atomic(path, text):
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def thread_cap():
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw == "":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"cli: {THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"cli: {THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


# ---------------------------------------------------------------------------
# model construction
# ---------------------------------------------------------------------------

def _constant_market(env, command):
    if not (isinstance(env, MarketPath) and isinstance(env.r, Constant) and isinstance(env.w, Constant)):
        raise ConfigError(f"cli: {command} needs a market with constant r and w")
    return env.r.value, env.w.value


def _terminal(cfg: RunConfig, h, env):
    spec = cfg.terminal
    gamma = float(cfg.utility["gamma"])
    if spec["kind"] == "stationary":
        r, w = _constant_market(env, "a stationary terminal utility")
        return de_solver.TerminalUtility.stationary(h, r, w, gamma)
    return de_solver.TerminalUtility(
        float(spec.get("gamma", gamma)),
        float(spec.get("scale", 1.0)),
        float(spec.get("shift", 0.0)),
        float(spec.get("offset", 0.0)),
    )


def _de_grid(spec):
    return de_solver.DEGrid(
        float(spec["T"]), int(spec["n_t"]), float(spec["k_lo"]), float(spec["k_hi"]), int(spec["n_k"])
    )


# ---------------------------------------------------------------------------
# commands: each returns (csv header, csv rows, result dict)
# ---------------------------------------------------------------------------

def run_lambda(cfg: RunConfig):
    h, gamma = cfg.discount_spec(), float(cfg.utility["gamma"])
    r, _ = _constant_market(cfg.environment_spec(), "lambda")
    res = propensity.lambda_constant(h, r, gamma)
    result = res.to_dict()
    try:
        result["lambda_specialized"] = propensity.lambda_specialized(h, r, gamma).lam
    except DomainError:
        pass
    return ["lambda", "margin"], [[res.lam, res.integrability_margin]], result


def run_recursion(cfg: RunConfig):
    h, gamma, env = cfg.discount_spec(), float(cfg.utility["gamma"]), cfg.environment_spec()
    path = recursion.solve_recursion(
        h, env, gamma,
        tol=cfg.num("tol", 1e-8),
        damping=cfg.num("damping", 0.5),
        max_iter=cfg.num("max_iter", 500),
        step=cfg.num("step", 0.05),
        t_end=cfg.num("t_end"),
    )
    rows = [[t, v, env.human_wealth(t)] for t, v in zip(path.grid, path.values)]
    result = {
        "iterations": path.iterations,
        "residual": path.residual,
        "history": list(path.history),
        "lambda_tail": path.tail,
    }
    return ["t", "lambda", "human_wealth"], rows, result


def run_paths(cfg: RunConfig):
    h, gamma, env = cfg.discount_spec(), float(cfg.utility["gamma"]), cfg.environment_spec()
    r, w = _constant_market(env, "paths")
    k0 = float(cfg.num("k0"))
    horizon, step = cfg.num("horizon", trajectory.DEFAULT_HORIZON), cfg.num("step", trajectory.DEFAULT_STEP)
    builders = {
        "equilibrium": trajectory.equilibrium_path,
        "precommitment": trajectory.precommitment_path,
        "naive": trajectory.naive_path,
    }
    paths, result = {}, {}
    for label, build in builders.items():
        try:
            path = build(h, r, w, k0, gamma, horizon, step)
        except (DivergenceError, NoEquilibriumError, DomainError) as exc:
            result[label] = {"error": str(exc)}
            continue
        paths[label] = {t: (k, c) for t, k, c in zip(path.times, path.capital, path.consumption)}
        result[label] = {
            "c0": path.consumption[0],
            "truncated": path.truncated,
            "budget_gap": trajectory.budget_gap(path, env),
        }
    if not paths:
        raise SolverFailure("cli: paths: no path could be computed")
    # one row per time in any path; a path without a sample there leaves its cells blank
    times = sorted(set().union(*(p.keys() for p in paths.values())))
    rows = []
    for t in times:
        row = [t]
        for label in builders:
            row.extend(paths.get(label, {}).get(t, ("", "")))
        rows.append(row)
    header = ["t", "k_eq", "c_eq", "k_pre", "c_pre", "k_naive", "c_naive"]
    return header, rows, result


def run_steady_state(cfg: RunConfig):
    h, f = cfg.discount_spec(), cfg.environment_spec()
    spec = cfg.num("k_grid")
    if not spec["hi"] > spec["lo"]:
        raise ConfigError("cli: steady-state: k_grid needs hi > lo")
    k = np.geomspace(spec["lo"], spec["hi"], spec["n"])
    extra = spec.get("fprime_points", [])
    if extra:
        if not isinstance(f, CobbDouglas):
            raise ConfigError("cli: steady-state: fprime_points need a Cobb-Douglas production function")
        k = np.union1d(k, [f.capital_for_marginal(x) for x in extra])
    workers = min(cfg.num("workers", 1), thread_cap())
    report = steady_state.scan_equilibrium_points(h, f, k, workers=workers)
    rows = [
        [kv, x, a, s, adm]
        for (kv, x, a, s), adm in zip(report.rows(), report.admissible)
    ]
    result = {
        "admissible_fprime_range": report.admissible_fprime_range,
        "admissible_k_sup": report.admissible_k_sup,
        "n_admissible": int(report.admissible.sum()),
        "n_points": len(k),
    }
    return ["k", "fprime", "alpha", "status", "admissible"], rows, result


def _value_grid_rows(vg):
    rows = []
    for i, t in enumerate(vg.t_grid):
        for j, k in enumerate(vg.k_grid):
            rows.append([t, k, vg.V[i, j], vg.sigma[i, j], bool(vg.tainted[i, j])])
    return rows


def run_de_solve(cfg: RunConfig):
    h, u, env = cfg.discount_spec(), cfg.utility_spec(), cfg.environment_spec()
    grid = _de_grid(cfg.num("grid"))
    g = _terminal(cfg, h, env)
    vg = de_solver.solve_ie(
        h, u, env, g, grid,
        tol=cfg.num("tol", 1e-6),
        damping=cfg.num("damping", 1.0),
        max_iter=cfg.num("max_iter", 200),
        strict=cfg.num("strict", False),
    )
    ie = de_solver.ie_residual(vg, h, u, env, substeps=cfg.num("substeps", 4))
    clean = ~vg.tainted
    result = {
        "iterations": vg.iterations,
        "history": vg.history,
        "n_tainted": int(vg.tainted.sum()),
        "ie_residual_max": float(ie[clean].max()) if clean.any() else None,
        "grid": grid.to_json(),
        "terminal": g.to_json(),
    }
    return ["t", "k", "V", "sigma", "tainted"], _value_grid_rows(vg), result


def read_value_grid(path, g):
    """Rebuild a ValueGrid from a ``de-solve`` CSV dump."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            missing = {"t", "k", "V", "sigma"} - set(reader.fieldnames or ())
            if missing:
                raise ConfigError(f"cli: de-check: grid dump {path} lacks columns {sorted(missing)}")
            rows = list(reader)
    except OSError as exc:
        raise ConfigError(f"cli: de-check: cannot read grid dump {path}: {exc.strerror}") from None
    try:
        data = np.array([[float(r["t"]), float(r["k"]), float(r["V"]), float(r["sigma"]),
                          float(r.get("tainted") or 0)] for r in rows])
    except ValueError as exc:
        raise ConfigError(f"cli: de-check: non-numeric entry in {path}: {exc}") from None
    if data.size == 0:
        raise ConfigError(f"cli: de-check: grid dump {path} is empty")
    t_grid, k_grid = np.unique(data[:, 0]), np.unique(data[:, 1])
    if len(t_grid) * len(k_grid) != len(data) or len(t_grid) < 3 or len(k_grid) < 5:
        raise ConfigError(f"cli: de-check: {path} is not a full rectangular grid")
    for name, axis in (("t", t_grid), ("k", k_grid)):
        steps = np.diff(axis)
        if np.max(np.abs(steps - steps.mean())) > 1e-9 * max(1.0, abs(axis).max()):
            raise ConfigError(f"cli: de-check: {name} axis of {path} is not uniform")
    if t_grid[0] != 0:
        raise ConfigError(f"cli: de-check: t axis of {path} must start at 0")
    order = np.lexsort((data[:, 1], data[:, 0]))
    shape = (len(t_grid), len(k_grid))
    V, sigma, tainted = (data[order, c].reshape(shape) for c in (2, 3, 4))
    return de_solver.ValueGrid(t_grid, k_grid, V, sigma, g, tainted.astype(bool))


def run_de_check(cfg: RunConfig):
    h, u, env = cfg.discount_spec(), cfg.utility_spec(), cfg.environment_spec()
    g = _terminal(cfg, h, env)
    vg = read_value_grid(cfg.input["grid_csv"], g)
    de = de_solver.de_residual_grid(vg, h, u, env)
    ie = de_solver.ie_residual(vg, h, u, env, substeps=cfg.num("substeps", 4))
    interior = np.zeros_like(vg.tainted)
    interior[1:-1, 1:-1] = True
    clean = interior & ~vg.tainted

    rng = np.random.default_rng(cfg.num("seed", 0))
    candidates = np.argwhere(clean)
    n_nodes = min(cfg.num("p1_nodes", 20), len(candidates))
    picks = candidates[rng.choice(len(candidates), size=n_nodes, replace=False)] if n_nodes else []
    n_c = cfg.num("p1_points", 101)
    p1_max, argmax_offset, route_gap = -math.inf, 0.0, 0.0
    for i, j in picks:
        t, k, s = vg.t_grid[i], vg.k_grid[j], vg.sigma[i, j]
        cs = np.linspace(0.5 * s, 1.5 * s, n_c)
        pairs = [de_solver.p1_payoff(vg, h, u, env, t, k, c, tol=cfg.num("tol", 1e-4)) for c in cs]
        reduced = np.array([p[0] for p in pairs])
        route_gap = max(route_gap, float(np.max(np.abs(reduced - [p[1] for p in pairs]))))
        p1_max = max(p1_max, float(reduced.max()))
        argmax_offset = max(argmax_offset, abs(cs[np.argmax(reduced)] - s) / (cs[1] - cs[0]))

    rows = []
    for i, t in enumerate(vg.t_grid):
        for j, k in enumerate(vg.k_grid):
            rows.append([t, k, de[i, j], ie[i, j], bool(vg.tainted[i, j])])
    result = {
        "de_residual_max": float(np.max(np.abs(de[clean]))) if clean.any() else None,
        "ie_residual_max": float(np.max(ie[clean])) if clean.any() else None,
        "n_checked": int(clean.sum()),
        "p1_nodes": int(n_nodes),
        "p1_max": p1_max if n_nodes else None,
        "p1_argmax_offset_steps": argmax_offset if n_nodes else None,
        "p1_route_gap": route_gap if n_nodes else None,
    }
    return ["t", "k", "de_residual", "ie_residual", "tainted"], rows, result


RUNNERS = {
    "lambda": run_lambda,
    "recursion": run_recursion,
    "paths": run_paths,
    "steady-state": run_steady_state,
    "de-solve": run_de_solve,
    "de-check": run_de_check,
}


# ---------------------------------------------------------------------------
# orchestration
# ---------------------------------------------------------------------------

def artifact_paths(cfg: RunConfig, out_dir=None):
    out = cfg.output or {}
    directory = out_dir or out.get("dir", ".")
    prefix = out.get("prefix", cfg.command)
    return os.path.join(directory, prefix + ".csv"), os.path.join(directory, prefix + ".json")


def run(cfg: RunConfig, out_dir=None, stderr=None):
    """Run one configured command; returns the exit status."""
    stderr = stderr or sys.stderr
    csv_path, json_path = artifact_paths(cfg, out_dir)
    sidecar = {"command": cfg.command, "config": cfg.to_dict()}
    try:
        header, rows, result = RUNNERS[cfg.command](cfg)
    except (ConvergenceError, NoEquilibriumError, WindowViolation, DiagnosticError, SolverFailure) as exc:
        sidecar.update(status="failed", error=str(exc), history=getattr(exc, "history", []))
        try:
            os.makedirs(os.path.dirname(json_path) or ".", exist_ok=True)
            _write_atomic(json_path, json.dumps(_jsonable(sidecar), indent=2) + "\n")
        except OSError as io_exc:
            print(f"cli: cannot write {json_path}: {io_exc.strerror}", file=stderr)
        print(str(exc), file=stderr)
        return EXIT_SOLVER
    except (DomainError, DivergenceError) as exc:
        print(str(exc), file=stderr)
        return EXIT_CONFIG
    sidecar.update(status="ok", result=result)
    try:
        os.makedirs(os.path.dirname(csv_path) or ".", exist_ok=True)
        _write_atomic(csv_path, csv_text(header, rows))
        _write_atomic(json_path, json.dumps(_jsonable(sidecar), indent=2) + "\n")
    except OSError as exc:
        print(f"cli: cannot write artifacts: {exc.strerror}", file=stderr)
        return EXIT_CONFIG
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="timeconsistent",
        description="Equilibrium consumption under non-exponential discounting.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} solver from a JSON config")
        p.add_argument("config", help="path to the JSON run configuration")
        p.add_argument("--output-dir", help="directory for the CSV and JSON artifacts")
        p.add_argument("--tol", type=float, help="override numerics.tol")
        p.add_argument("--damping", type=float, help="override numerics.damping")
        p.add_argument("--max-iter", type=int, help="override numerics.max_iter")
        p.add_argument("--step", type=float, help="override numerics.step")
        p.add_argument("--substeps", type=int, help="override numerics.substeps")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.from_file(args.config)
        if cfg.command != args.command:
            raise ConfigError(
                f"cli: config command {cfg.command!r} does not match subcommand {args.command!r}"
            )
        cfg = cfg.with_numerics(
            tol=args.tol, damping=args.damping, max_iter=args.max_iter,
            step=args.step, substeps=args.substeps,
        )
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg, args.output_dir)


if __name__ == "__main__":
    sys.exit(main())
