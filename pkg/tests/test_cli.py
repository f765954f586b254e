import csv
import json
import os
import re
import subprocess
import sys
from pathlib import Path

import pytest

from timeconsistent import cli
from timeconsistent.config import ConfigError, RunConfig, load_schema

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def run_cli(name, out_dir, *extra):
    cfg = json.loads((CONFIGS / f"{name}.json").read_text())
    return cli.main([cfg["command"], str(CONFIGS / f"{name}.json"), "--output-dir", str(out_dir), *extra])


def write_config(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


# ---------------------------------------------------------------------------
# example scenarios
# ---------------------------------------------------------------------------

def test_lambda_exponential(tmp_path):
    assert run_cli("lambda_exponential", tmp_path) == 0
    sidecar = json.loads((tmp_path / "lambda_exponential.json").read_text())
    assert sidecar["status"] == "ok"
    assert sidecar["result"]["lambda"] == pytest.approx(0.04, rel=1e-14)
    rows = read_csv(tmp_path / "lambda_exponential.csv")
    assert float(rows[0]["lambda"]) == pytest.approx(0.04, rel=1e-14)


def test_steady_state_exponential_single_degenerate_row(tmp_path):
    assert run_cli("steady_state_exponential", tmp_path) == 0
    rows = read_csv(tmp_path / "steady_state_exponential.csv")
    admissible = [r for r in rows if r["admissible"] == "1"]
    assert len(admissible) == 1
    assert admissible[0]["status"] == "Degenerate"
    assert float(admissible[0]["fprime"]) == pytest.approx(0.05, rel=1e-14)


def test_steady_state_mixture_band(tmp_path):
    assert run_cli("steady_state_mixture", tmp_path) == 0
    lo, hi = json.loads((tmp_path / "steady_state_mixture.json").read_text())["result"]["admissible_fprime_range"]
    assert 0.02 <= lo < hi <= 0.10


def test_recursion_columns(tmp_path):
    assert run_cli("recursion_piecewise", tmp_path) == 0
    rows = read_csv(tmp_path / "recursion_piecewise.csv")
    assert list(rows[0]) == ["t", "lambda", "human_wealth"]
    sidecar = json.loads((tmp_path / "recursion_piecewise.json").read_text())
    assert sidecar["result"]["residual"] < 1e-8
    assert len(sidecar["result"]["history"]) == sidecar["result"]["iterations"]


def test_paths_columns_and_budget(tmp_path):
    assert run_cli("paths_mixture", tmp_path) == 0
    rows = read_csv(tmp_path / "paths_mixture.csv")
    assert list(rows[0]) == ["t", "k_eq", "c_eq", "k_pre", "c_pre", "k_naive", "c_naive"]
    result = json.loads((tmp_path / "paths_mixture.json").read_text())["result"]
    for label in ("equilibrium", "precommitment", "naive"):
        assert abs(result[label]["budget_gap"]) < 1e-4


def test_de_solve_then_check(tmp_path, monkeypatch):
    assert run_cli("de_solve_mixture", tmp_path) == 0
    solved = json.loads((tmp_path / "de_solve_mixture.json").read_text())["result"]
    assert solved["ie_residual_max"] < 1e-4
    monkeypatch.chdir(tmp_path)
    assert run_cli("de_check_mixture", tmp_path) == 0
    check = json.loads((tmp_path / "de_check_mixture.json").read_text())["result"]
    assert check["de_residual_max"] < 1e-4
    assert check["p1_max"] <= 1e-12
    assert check["p1_argmax_offset_steps"] <= 1
    assert check["p1_nodes"] == 5


# ---------------------------------------------------------------------------
# invariants
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("name", ["lambda_mixture", "recursion_piecewise", "steady_state_mixture"])
def test_config_echo_round_trips(tmp_path, name):
    assert run_cli(name, tmp_path, "--tol", "1e-9") == 0
    echo = json.loads((tmp_path / f"{name}.json").read_text())["config"]
    original = RunConfig.from_file(CONFIGS / f"{name}.json").with_numerics(tol=1e-9)
    assert RunConfig.from_dict(echo) == original


@pytest.mark.parametrize("name", ["lambda_mixture", "paths_mixture", "steady_state_mixture"])
def test_artifacts_are_byte_identical(tmp_path, name):
    assert run_cli(name, tmp_path / "a") == 0
    assert run_cli(name, tmp_path / "b") == 0
    a = (tmp_path / "a" / f"{name}.csv").read_bytes()
    assert a == (tmp_path / "b" / f"{name}.csv").read_bytes()


def test_floats_round_trip_bit_exactly():
    value = 0.1 + 0.2
    assert float(cli.csv_text(["x"], [[value]]).splitlines()[1]) == value


def test_docs_schema_matches_packaged_schema():
    docs = json.loads((ROOT / "docs" / "config.schema.json").read_text())
    assert docs == load_schema()


# ---------------------------------------------------------------------------
# failures
# ---------------------------------------------------------------------------

def test_malformed_json_exits_1_without_artifacts(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    out = tmp_path / "out"
    assert cli.main(["lambda", str(path), "--output-dir", str(out)]) == 1
    assert not out.exists() or not any(out.iterdir())


def test_unknown_key_rejected(tmp_path, capsys):
    data = json.loads((CONFIGS / "lambda_exponential.json").read_text())
    data["extra"] = 1
    out = tmp_path / "out"
    assert cli.main(["lambda", str(write_config(tmp_path, data)), "--output-dir", str(out)]) == 1
    assert "cli:" in capsys.readouterr().err
    assert not out.exists() or not any(out.iterdir())


def test_missing_required_section_rejected(tmp_path):
    data = json.loads((CONFIGS / "steady_state_exponential.json").read_text())
    del data["numerics"]
    assert cli.main(["steady-state", str(write_config(tmp_path, data)), "--output-dir", str(tmp_path / "o")]) == 1


def test_subcommand_mismatch_exits_1(tmp_path):
    assert cli.main(["recursion", str(CONFIGS / "lambda_exponential.json"), "--output-dir", str(tmp_path)]) == 1


def test_domain_error_exits_1_without_artifacts(tmp_path, capsys):
    data = json.loads((CONFIGS / "lambda_exponential.json").read_text())
    data["environment"]["r"] = -0.01
    out = tmp_path / "out"
    assert cli.main(["lambda", str(write_config(tmp_path, data)), "--output-dir", str(out)]) == 1
    assert re.match(r"^(environment|propensity): ", capsys.readouterr().err)
    assert not out.exists() or not any(out.iterdir())


def test_non_convergence_exits_2_with_history(tmp_path):
    out = tmp_path / "out"
    assert run_cli("recursion_piecewise", out, "--max-iter", "2") == 2
    sidecar = json.loads((out / "recursion_piecewise.json").read_text())
    assert sidecar["status"] == "failed"
    assert len(sidecar["history"]) == 2
    assert not (out / "recursion_piecewise.csv").exists()


def test_de_solve_non_convergence_exits_2(tmp_path):
    out = tmp_path / "out"
    assert run_cli("de_solve_mixture", out, "--max-iter", "1") == 2
    assert len(json.loads((out / "de_solve_mixture.json").read_text())["history"]) == 1


def test_no_equilibrium_exits_2(tmp_path):
    data = {
        "command": "lambda",
        "discount": {"family": "generalized_hyperbolic", "a": 1.0, "b": 2.0, "rho": 0.0},
        "utility": {"gamma": 2.0},
        "environment": {"kind": "market", "r": 0.03, "w": 0.0},
    }
    out = tmp_path / "out"
    assert cli.main(["lambda", str(write_config(tmp_path, data)), "--output-dir", str(out)]) == 2
    assert json.loads((out / "lambda.json").read_text())["status"] == "failed"


def test_de_check_rejects_ragged_grid(tmp_path):
    dump = tmp_path / "grid.csv"
    dump.write_text("t,k,V,sigma\n0,1,1,1\n0,2,1,1\n0.5,1,1,1\n")
    data = json.loads((CONFIGS / "de_check_mixture.json").read_text())
    data["input"]["grid_csv"] = str(dump)
    assert cli.main(["de-check", str(write_config(tmp_path, data)), "--output-dir", str(tmp_path / "o")]) == 1


# ---------------------------------------------------------------------------
# thread cap
# ---------------------------------------------------------------------------

def test_thread_cap_default(monkeypatch):
    monkeypatch.delenv(cli.THREADS_ENV, raising=False)
    assert cli.thread_cap() == (os.cpu_count() or 1)


def test_thread_cap_value(monkeypatch):
    monkeypatch.setenv(cli.THREADS_ENV, "3")
    assert cli.thread_cap() == 3


@pytest.mark.parametrize("raw", ["0", "-2", "many"])
def test_thread_cap_rejects_invalid(monkeypatch, raw):
    monkeypatch.setenv(cli.THREADS_ENV, raw)
    with pytest.raises(ConfigError):
        cli.thread_cap()


def test_invalid_thread_cap_exits_1(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.THREADS_ENV, "zero")
    assert run_cli("steady_state_mixture", tmp_path / "o") == 1


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "timeconsistent.cli", "lambda", str(CONFIGS / "lambda_exponential.json"),
         "--output-dir", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "lambda_exponential.csv").exists()
