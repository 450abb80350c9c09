"""Command-line interface: subcommands, artifacts, and exit codes."""

import json

import pytest
from click.testing import CliRunner

from rermlab.cli import gradient_check_suite, main


@pytest.fixture
def runner():
    return CliRunner()


def _write_config(path, **overrides):
    raw = {
        "task": "linreg",
        "data": {"source": "synthetic", "n": 60, "d": 3, "noise_sd": 0.1, "seed": 0},
        "lambda": 0.1,
        "algorithms": [
            {"name": "gd", "passes": 30, "eta": 0.3},
            {"name": "sgd", "passes": 15, "schedule": {"kind": "inverse_sqrt", "c": 0.05}},
        ],
        "seeds": [0],
        "figures": False,
    }
    raw.update(overrides)
    path.write_text(json.dumps(raw))
    return path


def test_gradient_check_suite_is_tight():
    results = gradient_check_suite(probes=5, seed=0)
    assert set(results) == {"linear/squared", "linear/logistic", "mlp/cross_entropy"}
    assert max(results.values()) <= 1e-6


def test_check_gradients_command(runner):
    result = runner.invoke(main, ["check-gradients", "--probes", "5"])
    assert result.exit_code == 0
    assert result.output.count("[ok]") == 3


def test_check_gradients_fails_on_impossible_tolerance(runner):
    result = runner.invoke(main, ["check-gradients", "--probes", "3", "--tolerance", "1e-30"])
    assert result.exit_code == 1


def test_run_command_writes_artifacts(runner, tmp_path):
    config = _write_config(tmp_path / "config.json")
    out = tmp_path / "out"
    result = runner.invoke(main, ["run", str(config), "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert (out / "gd_seed0.csv").exists()
    assert (out / "comparison.json").exists()
    assert "winner" in result.output


def test_run_command_seed_override(runner, tmp_path):
    config = _write_config(tmp_path / "config.json")
    out = tmp_path / "out"
    result = runner.invoke(main, ["run", str(config), "--out", str(out), "--seed", "7"])
    assert result.exit_code == 0, result.output
    assert (out / "sgd_seed7.csv").exists()
    assert not (out / "sgd_seed0.csv").exists()


def test_run_command_rejects_bad_config(runner, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    result = runner.invoke(main, ["run", str(bad)])
    assert result.exit_code == 1
    assert "config" in result.output


def test_run_command_names_failing_stage(runner, tmp_path):
    config = _write_config(
        tmp_path / "config.json",
        algorithms=[{"name": "gd", "passes": 2000, "eta": 100.0}],
    )
    result = runner.invoke(main, ["run", str(config), "--out", str(tmp_path / "out")])
    assert result.exit_code == 1
    assert "run:gd" in result.output


def test_compare_command_over_existing_artifacts(runner, tmp_path):
    config = _write_config(tmp_path / "config.json")
    out = tmp_path / "out"
    assert runner.invoke(main, ["run", str(config), "--out", str(out)]).exit_code == 0
    summary = tmp_path / "summary"
    result = runner.invoke(main, ["compare", str(out), "--out", str(summary)])
    assert result.exit_code == 0, result.output
    report = json.loads((summary / "comparison.json").read_text())
    assert set(report["passes_to_threshold"]) == {"gd", "sgd"}
    assert (summary / "comparison.csv").exists()
    pngs = list(summary.glob("*.png"))
    assert len(pngs) == 1


def test_compare_command_requires_two_algorithms(runner, tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    result = runner.invoke(main, ["compare", str(empty)])
    assert result.exit_code == 1
    assert "compare" in result.output


def test_stability_audit_command(runner):
    result = runner.invoke(
        main, ["stability-audit", "--n", "40", "--d", "3", "--trials", "10"]
    )
    assert result.exit_code == 0, result.output
    assert "beta0" in result.output and "beta1" in result.output
    assert "False" not in result.output


def test_bounds_command_expected(runner, tmp_path):
    inputs = tmp_path / "inputs.json"
    inputs.write_text(
        json.dumps(
            {
                "kind": "expected",
                "beta0": 0.01,
                "beta1": 0.005,
                "rho0": 0.02,
                "rho1": 0.04,
                "L": 1.0,
                "gamma": 2.0,
                "n": 100,
            }
        )
    )
    result = runner.invoke(main, ["bounds", str(inputs)])
    assert result.exit_code == 0, result.output
    report = json.loads(result.output)
    assert report["bound_kind"] == "expected"
    assert report["total_excess"] == pytest.approx(sum(report["terms"].values()))


def test_bounds_command_writes_file(runner, tmp_path):
    inputs = tmp_path / "inputs.json"
    inputs.write_text(
        json.dumps(
            {
                "kind": "nonconvex",
                "beta0": 0.01,
                "L": 1.0,
                "mu": 0.5,
                "min_rho2": 0.01,
                "local_gap": 0.0,
                "t1_reached": True,
            }
        )
    )
    out = tmp_path / "report.json"
    result = runner.invoke(main, ["bounds", str(inputs), "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert json.loads(out.read_text())["bound_kind"] == "nonconvex"


def test_bounds_command_rejects_unknown_kind_and_uncertified_nonconvex(runner, tmp_path):
    inputs = tmp_path / "inputs.json"
    inputs.write_text(json.dumps({"kind": "pac_bayes"}))
    assert runner.invoke(main, ["bounds", str(inputs)]).exit_code == 1
    inputs.write_text(
        json.dumps(
            {"kind": "nonconvex", "beta0": 0.0, "L": 1.0, "mu": 1.0, "min_rho2": 0.1, "local_gap": 0.0}
        )
    )
    result = runner.invoke(main, ["bounds", str(inputs)])
    assert result.exit_code == 1
    assert "T1" in result.output
