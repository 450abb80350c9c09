"""Experiment orchestration: configs, thresholds, artifacts, figures."""

import json

import numpy as np
import pytest

from rermlab import losses
from rermlab.data import generate_gaussian_regression
from rermlab.exceptions import StageError
from rermlab.harness import (
    DEFAULT_THRESHOLDS,
    AlgorithmSpec,
    ExperimentConfig,
    build_dataset,
    build_objective,
    compare_report,
    comparison_to_csv,
    passes_to_thresholds,
    run_experiment,
)
from rermlab.models import LinearModel, MlpModel
from rermlab.objective import Objective
from rermlab.optim import StepSchedule, Trace, run_gd
from rermlab.oracles import ridge_closed_form


def _tiny_config(**overrides):
    raw = {
        "task": "linreg",
        "data": {"source": "synthetic", "n": 80, "d": 4, "noise_sd": 0.1, "seed": 0},
        "lambda": 0.1,
        "algorithms": [
            {"name": "gd", "passes": 40, "eta": 0.3},
            {"name": "sgd", "passes": 20, "schedule": {"kind": "inverse_sqrt", "c": 0.05}},
            {"name": "svrg", "passes": 20, "eta": 0.05, "inner_m": "2n"},
        ],
        "seeds": [0],
        "bounds": {"expected": True, "high_prob": {"delta": 0.1}},
        "figures": False,
    }
    raw.update(overrides)
    return ExperimentConfig.from_dict(raw)


def test_config_json_round_trip(tmp_path):
    config = _tiny_config()
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config.to_dict()))
    back = ExperimentConfig.from_json(path)
    assert back == config


def test_config_validation():
    with pytest.raises(ValueError):
        _tiny_config(task="svm")
    with pytest.raises(ValueError):
        _tiny_config(algorithms=[])
    with pytest.raises(ValueError):
        _tiny_config(seeds=[])
    with pytest.raises(ValueError):
        _tiny_config(algorithms=[{"name": "adam", "passes": 1}])
    with pytest.raises(ValueError):
        _tiny_config(algorithms=[{"name": "gd", "passes": -1, "eta": 0.1}])
    with pytest.raises(ValueError):
        _tiny_config(algorithms=[{"name": "gd", "passes": 1}])  # missing eta
    with pytest.raises(ValueError):
        _tiny_config(algorithms=[{"name": "sgd", "passes": 1}])  # missing schedule


def test_lambda_resolution():
    assert _tiny_config().resolve_lambda(100) == 0.1
    default = _tiny_config(**{"lambda": "1/sqrt(n)"})
    assert default.resolve_lambda(400) == pytest.approx(0.05)
    with pytest.raises(ValueError):
        _tiny_config(**{"lambda": -1.0}).resolve_lambda(10)


def test_resolved_inner_m():
    spec = AlgorithmSpec("svrg", 10, eta=0.1, inner_m="2n")
    assert spec.resolved_inner_m(50) == 100
    assert AlgorithmSpec("svrg", 10, eta=0.1, inner_m="5n").resolved_inner_m(50) == 250
    assert AlgorithmSpec("svrg", 10, eta=0.1, inner_m=37).resolved_inner_m(50) == 37
    assert AlgorithmSpec("svrg", 10, eta=0.1).resolved_inner_m(50) == 100
    with pytest.raises(ValueError):
        AlgorithmSpec("svrg", 10, eta=0.1, inner_m="lots").resolved_inner_m(50)


def test_build_dataset_and_objective():
    config = _tiny_config()
    full = build_dataset(config)
    assert full.n == 80 and full.d == 4
    obj = build_objective(config, full)
    assert isinstance(obj.model, LinearModel)
    assert obj.lam == 0.1
    mlp_cfg = ExperimentConfig.from_dict(
        {
            "task": "mlp",
            "data": {"source": "synthetic", "n": 40, "d": 3, "k": 3, "seed": 0},
            "mlp": {"hidden": 5, "n_classes": 3},
            "algorithms": [{"name": "gd", "passes": 1, "eta": 0.1}],
        }
    )
    mobj = build_objective(mlp_cfg, build_dataset(mlp_cfg))
    assert isinstance(mobj.model, MlpModel)
    assert mobj.model.hidden == 5


def _gd_trace_with_reference(n=60, d=3, lam=0.2, T=120, seed=0):
    ds, _ = generate_gaussian_regression(n, d, noise_sd=0.1, seed=seed)
    obj = Objective(ds, LinearModel(d), losses.SQUARED, lam)
    w_star = ridge_closed_form(ds, lam)
    trace = run_gd(obj, np.zeros(d), eta=0.2, T=T, reference=w_star)
    return obj, w_star, trace


def test_passes_to_thresholds_matches_trace_rescan():
    obj, w_star, trace = _gd_trace_with_reference()
    ref = obj.regularized_risk(w_star)
    table = passes_to_thresholds(trace, ref, DEFAULT_THRESHOLDS)
    reg = trace.series("reg_risk")
    passes = trace.series("data_passes")
    rel = (reg - ref) / (reg[0] - ref)
    for thr, got in table.items():
        hits = np.nonzero(rel <= thr)[0]
        expect = float(passes[hits[0]]) if hits.size else None
        assert got == expect
    # a tighter threshold can never be hit earlier than a looser one
    reached = [v for v in table.values() if v is not None]
    assert reached == sorted(reached)


def test_passes_to_thresholds_already_converged_start():
    obj, w_star, _ = _gd_trace_with_reference()
    trace = run_gd(obj, w_star, eta=0.01, T=2)
    table = passes_to_thresholds(trace, obj.regularized_risk(w_star), [1e-1, 1e-4])
    assert table == {1e-1: 0.0, 1e-4: 0.0}


def test_compare_report_identical_traces_have_unit_ratios():
    obj, w_star, trace = _gd_trace_with_reference()
    ref = obj.regularized_risk(w_star)
    report = compare_report({"gd": [trace], "sgd": [trace]}, ref, thresholds=(1e-1, 1e-3))
    for thr_entry in report["speedup_ratios"].values():
        for ratio in thr_entry.values():
            assert ratio == pytest.approx(1.0)
    assert report["early_phase_winner"] in ("gd", "sgd")


def test_compare_report_unreached_thresholds_are_null_not_errors():
    obj, w_star, _ = _gd_trace_with_reference()
    short = run_gd(obj, np.zeros(3), eta=0.2, T=2, reference=w_star)
    report = compare_report({"gd": [short]}, obj.regularized_risk(w_star))
    vals = report["passes_to_threshold"]["gd"]
    assert vals["1e-08"] is None
    assert report["tightest_common_threshold"] is not None or all(
        v is None for v in vals.values()
    )


def test_compare_report_default_reference_is_best_observed_objective():
    obj, w_star, trace = _gd_trace_with_reference()
    report = compare_report({"gd": [trace]})
    assert report["reference_risk"] == pytest.approx(float(np.min(trace.series("reg_risk"))))


def test_comparison_csv_layout(tmp_path):
    obj, w_star, trace = _gd_trace_with_reference()
    report = compare_report({"gd": [trace]}, obj.regularized_risk(w_star), thresholds=(1e-1, 1e-8))
    path = tmp_path / "comparison.csv"
    comparison_to_csv(report, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "algorithm,threshold,data_passes"
    assert len(lines) == 3
    assert lines[1].startswith("gd,0.1,")


def test_run_experiment_writes_all_artifacts(tmp_path):
    config = _tiny_config()
    artifact = run_experiment(config, tmp_path / "out")
    out = artifact.out_dir
    for name in (
        "gd_seed0.csv",
        "gd_seed0.meta.json",
        "gd_seed0.bounds.expected.json",
        "gd_seed0.bounds.high_prob.json",
        "sgd_seed0.csv",
        "svrg_seed0.csv",
        "comparison.json",
        "comparison.csv",
        "index.json",
    ):
        assert (out / name).exists(), name
    index = json.loads((out / "index.json").read_text())
    assert index["complete"] is True
    assert index["reference_objective"] <= index["reference_train_risk"] + config.resolve_lambda(40) * 100
    # every indexed file exists on disk
    for name in index["files"]:
        assert (out / name).exists(), name
    # bound totals are finite, positive, and itemized
    report = json.loads((out / "gd_seed0.bounds.expected.json").read_text())
    assert report["total_excess"] == pytest.approx(sum(report["terms"].values()))
    assert report["total_excess"] > 0


def test_run_experiment_is_byte_deterministic(tmp_path):
    config = _tiny_config()
    a = run_experiment(config, tmp_path / "a").out_dir
    b = run_experiment(config, tmp_path / "b").out_dir
    for name in ("gd_seed0.csv", "sgd_seed0.csv", "svrg_seed0.csv", "comparison.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_run_experiment_figures(tmp_path):
    config = _tiny_config(figures=True)
    artifact = run_experiment(config, tmp_path / "figs")
    pngs = [f for f in artifact.index["files"] if f.endswith(".png")]
    assert len(pngs) == 3
    for name in pngs:
        assert (artifact.out_dir / name).stat().st_size > 0


def test_run_experiment_stage_errors_name_the_stage(tmp_path):
    bad = _tiny_config(data={"source": "libsvm", "path": "/nonexistent/file.libsvm"})
    with pytest.raises(StageError) as err:
        run_experiment(bad, tmp_path / "bad")
    assert "data" in str(err.value)
    # a partial index is still written, flagged incomplete
    index = json.loads((tmp_path / "bad" / "index.json").read_text())
    assert index["complete"] is False

    diverging = _tiny_config(
        algorithms=[{"name": "gd", "passes": 2000, "eta": 100.0}], bounds={}
    )
    with pytest.raises(StageError) as err:
        run_experiment(diverging, tmp_path / "diverge")
    assert "run:gd" in str(err.value)


def test_run_experiment_multiple_seeds_median(tmp_path):
    config = _tiny_config(seeds=[0, 1, 2], bounds={})
    artifact = run_experiment(config, tmp_path / "seeds")
    assert set(artifact.traces) == {
        (algo, s) for algo in ("gd", "sgd", "svrg") for s in (0, 1, 2)
    }
    # GD ignores the seed, so its three traces are identical
    gd = [t for (n, _s), t in artifact.traces.items() if n == "gd"]
    assert np.array_equal(gd[0].series("reg_risk"), gd[1].series("reg_risk"))
