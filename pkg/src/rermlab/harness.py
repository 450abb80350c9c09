"""Experiment orchestration: configs, reference oracles, sweeps, artifacts.

A run is driven by a JSON config (a documented key-value tree, see
`ExperimentConfig.from_dict`) and writes, per (algorithm, seed): a trace CSV
and a metadata JSON, plus bound-report JSONs when enabled, an aggregate
passes-to-threshold comparison (JSON and CSV), an index of all artifacts,
and (by default) the three matplotlib figures of the experimental protocol:
train loss, test loss, and log-scaled test loss against data passes.

Identical configs reproduce identical CSV/JSON artifacts byte for byte.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bounds as bounds_mod
from . import losses
from .data import (
    Dataset,
    generate_gaussian_multiclass,
    generate_gaussian_regression,
    paper_style_feature_scales,
    parse_libsvm,
    split,
)
from .exceptions import StageError
from .models import LinearModel, MlpModel
from .objective import Objective, ProblemConstants
from .optim import StepSchedule, Trace, run_gd, run_sgd, run_svrg
from .oracles import gd_reference, ridge_closed_form

DEFAULT_THRESHOLDS = tuple(10.0 ** (-k) for k in range(1, 9))

TASKS = ("linreg", "logreg", "mlp")


@dataclass(frozen=True)
class AlgorithmSpec:
    """One algorithm entry of a config.

    `passes` is the data-pass budget; it is converted to iterations (GD,
    SGD) or stages (SVRG, accounting 1 + 2 inner_m / n passes per stage).
    SVRG's inner_m may be an integer or the strings "2n" / "5n".
    """

    name: str
    passes: float
    eta: float | None = None
    schedule: StepSchedule | None = None
    inner_m: int | str | None = None
    stage_output: str = "last"

    def resolved_inner_m(self, n: int) -> int:
        if self.inner_m is None:
            return 2 * n
        if isinstance(self.inner_m, str):
            if not self.inner_m.endswith("n"):
                raise ValueError(f"bad inner_m spec {self.inner_m!r}")
            return int(float(self.inner_m[:-1] or "1") * n)
        return int(self.inner_m)

    def to_dict(self) -> dict:
        out = {"name": self.name, "passes": self.passes}
        if self.eta is not None:
            out["eta"] = self.eta
        if self.schedule is not None:
            out["schedule"] = {"kind": self.schedule.kind, "c": self.schedule.c}
        if self.inner_m is not None:
            out["inner_m"] = self.inner_m
        if self.name == "svrg":
            out["stage_output"] = self.stage_output
        return out


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment configuration.

    JSON schema (keys at the top level):
      task:            "linreg" | "logreg" | "mlp"
      data:            {"source": "synthetic", "n": int, "d": int, ...}
                       or {"source": "libsvm", "path": str}
                       or {"source": "bundled", "name": str}
                       synthetic extras: "noise_sd" (linreg),
                       "paper_style_scales" (linreg, bool), "k" (mlp),
                       "seed" (int)
      train_fraction:  float in (0,1), default 0.5
      split_seed:      int, default 0
      lambda:          positive number or the string "1/sqrt(n)" (default)
      algorithms:      list of {"name": "gd"|"sgd"|"svrg", "passes": num,
                       "eta": num | "schedule": {"kind":..., "c":...},
                       "inner_m": int|"2n"|"5n", "stage_output": "last"|"random"}
      seeds:           list of ints, default [0]
      eval_every:      optional int override for trace cadence
      thresholds:      optional list of relative training-loss thresholds
      bounds:          {"expected": bool, "high_prob": {"delta": num},
                       "nonconvex": {"beta0", "mu", "gamma", "epsilon0",
                       "local_gap"}} (all optional)
      mlp:             {"hidden": int, "n_classes": int} (mlp task only)
      figures:         bool, default true
    """

    task: str
    data: dict
    algorithms: tuple[AlgorithmSpec, ...]
    seeds: tuple[int, ...] = (0,)
    train_fraction: float = 0.5
    split_seed: int = 0
    lam: float | str = "1/sqrt(n)"
    eval_every: int | None = None
    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS
    bound_specs: dict = field(default_factory=dict)
    mlp_arch: dict = field(default_factory=lambda: {"hidden": 100, "n_classes": 10})
    figures: bool = True

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}, expected one of {TASKS}")
        if not self.algorithms:
            raise ValueError("config must list at least one algorithm")
        if not self.seeds:
            raise ValueError("config must list at least one seed")
        for spec in self.algorithms:
            if spec.name not in ("gd", "sgd", "svrg"):
                raise ValueError(f"unknown algorithm {spec.name!r}")
            if spec.passes < 0:
                raise ValueError(f"{spec.name}: passes budget must be >= 0")
            if spec.name in ("gd", "svrg") and (spec.eta is None or spec.eta <= 0):
                raise ValueError(f"{spec.name} requires a positive eta")
            if spec.name == "sgd" and spec.schedule is None:
                raise ValueError("sgd requires a schedule")

    @staticmethod
    def from_dict(raw: dict) -> "ExperimentConfig":
        algos = []
        for entry in raw.get("algorithms", []):
            schedule = None
            if "schedule" in entry:
                schedule = StepSchedule(entry["schedule"]["kind"], entry["schedule"]["c"])
            algos.append(
                AlgorithmSpec(
                    name=entry["name"],
                    passes=entry["passes"],
                    eta=entry.get("eta"),
                    schedule=schedule,
                    inner_m=entry.get("inner_m"),
                    stage_output=entry.get("stage_output", "last"),
                )
            )
        return ExperimentConfig(
            task=raw["task"],
            data=dict(raw["data"]),
            algorithms=tuple(algos),
            seeds=tuple(raw.get("seeds", [0])),
            train_fraction=raw.get("train_fraction", 0.5),
            split_seed=raw.get("split_seed", 0),
            lam=raw.get("lambda", "1/sqrt(n)"),
            eval_every=raw.get("eval_every"),
            thresholds=tuple(raw.get("thresholds", DEFAULT_THRESHOLDS)),
            bound_specs=dict(raw.get("bounds", {})),
            mlp_arch=dict(raw.get("mlp", {"hidden": 100, "n_classes": 10})),
            figures=raw.get("figures", True),
        )

    @staticmethod
    def from_json(path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return ExperimentConfig.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "data": self.data,
            "algorithms": [a.to_dict() for a in self.algorithms],
            "seeds": list(self.seeds),
            "train_fraction": self.train_fraction,
            "split_seed": self.split_seed,
            "lambda": self.lam,
            "eval_every": self.eval_every,
            "thresholds": list(self.thresholds),
            "bounds": self.bound_specs,
            "mlp": self.mlp_arch,
            "figures": self.figures,
        }

    def resolve_lambda(self, n_train: int) -> float:
        if self.lam == "1/sqrt(n)":
            return 1.0 / math.sqrt(n_train)
        lam = float(self.lam)
        if lam <= 0:
            raise ValueError(f"lambda must be > 0, got {lam}")
        return lam


def build_dataset(config: ExperimentConfig) -> Dataset:
    """Materialize the full (pre-split) dataset a config describes."""
    spec = config.data
    source = spec.get("source", "synthetic")
    if source == "libsvm":
        return parse_libsvm(spec["path"])
    if source == "bundled":
        from .data import bundled_dataset_path

        return parse_libsvm(bundled_dataset_path(spec.get("name", "logistic_sample")))
    if source != "synthetic":
        raise ValueError(f"unknown data source {source!r}")
    seed = spec.get("seed", 0)
    if config.task == "linreg":
        scales = (
            paper_style_feature_scales(spec["d"])
            if spec.get("paper_style_scales", False)
            else None
        )
        dataset, _ = generate_gaussian_regression(
            spec["n"], spec["d"], spec.get("noise_sd", 0.1), seed, feature_scales=scales
        )
        return dataset
    if config.task == "logreg":
        from .data import generate_gaussian_binary

        dataset, _ = generate_gaussian_binary(
            spec["n"], spec["d"], seed, flip_prob=spec.get("flip_prob", 0.05)
        )
        return dataset
    dataset, _ = generate_gaussian_multiclass(
        spec["n"], spec["d"], spec.get("k", config.mlp_arch.get("n_classes", 10)), seed
    )
    return dataset


def build_objective(config: ExperimentConfig, train: Dataset) -> Objective:
    lam = config.resolve_lambda(train.n)
    if config.task == "linreg":
        return Objective(train, LinearModel(train.d), losses.SQUARED, lam)
    if config.task == "logreg":
        return Objective(train, LinearModel(train.d), losses.LOGISTIC, lam)
    model = MlpModel(
        train.d,
        hidden=config.mlp_arch.get("hidden", 100),
        n_classes=config.mlp_arch.get("n_classes", 10),
    )
    return Objective(train, model, losses.CROSS_ENTROPY, lam)


def initial_point(objective: Objective, seed: int) -> np.ndarray:
    """Shared start: zeros for linear models, seeded init for the MLP."""
    if isinstance(objective.model, LinearModel):
        return np.zeros(objective.model.p)
    return objective.model.init_params(seed)


def run_algorithm(
    objective: Objective,
    spec: AlgorithmSpec,
    w0,
    seed: int,
    eval_every: int | None,
    test_set: Dataset,
    reference,
) -> Trace:
    n = objective.n
    if spec.name == "gd":
        T = int(round(spec.passes))
        return run_gd(
            objective, w0, spec.eta, T,
            eval_every=eval_every or 1, test_set=test_set, reference=reference,
        )
    if spec.name == "sgd":
        T = int(round(spec.passes * n))
        return run_sgd(
            objective, w0, spec.schedule, T, seed,
            eval_every=eval_every, test_set=test_set, reference=reference,
        )
    inner_m = spec.resolved_inner_m(n)
    passes_per_stage = 1.0 + 2.0 * inner_m / n
    stages = int(round(spec.passes / passes_per_stage))
    if spec.passes > 0:
        stages = max(1, stages)
    return run_svrg(
        objective, w0, spec.eta, inner_m, stages, seed,
        eval_every=eval_every, test_set=test_set, reference=reference,
        stage_output=spec.stage_output,
    )


def passes_to_thresholds(
    trace: Trace, reference_risk: float, thresholds
) -> dict[float, float | None]:
    """First data-pass count at which the relative training-objective excess
    (reg_risk - reference_risk) / (initial - reference_risk) reaches each
    threshold; None when never reached.

    Thresholds are measured on the regularized objective, not the raw
    training risk: the raw risk at an iterate can dip below its value at
    the regularized minimizer, which would make relative excess negative.
    """
    train = trace.series("reg_risk")
    passes = trace.series("data_passes")
    initial_excess = train[0] - reference_risk
    out: dict[float, float | None] = {}
    if initial_excess <= 0:
        for thr in thresholds:
            out[thr] = 0.0
        return out
    rel = (train - reference_risk) / initial_excess
    for thr in thresholds:
        hits = np.nonzero(rel <= thr)[0]
        out[thr] = float(passes[hits[0]]) if hits.size else None
    return out


def compare_report(
    traces_by_algorithm: dict[str, list[Trace]],
    reference_risk: float | None = None,
    thresholds=DEFAULT_THRESHOLDS,
) -> dict:
    """Aggregate passes-to-threshold table with pairwise speedups.

    reference_risk is the regularized objective value at the reference
    minimizer; it defaults to the best objective value observed across all
    traces (the only available proxy when no certified minimizer exists).
    Per algorithm the reported passes are the median across its traces
    (one per seed).  Thresholds nobody reaches are reported as null, never
    an error.
    """
    if len(traces_by_algorithm) < 1:
        raise ValueError("need at least one algorithm trace")
    if reference_risk is None:
        reference_risk = min(
            float(np.min(t.series("reg_risk")))
            for traces in traces_by_algorithm.values()
            for t in traces
        )
    table: dict[str, dict[float, float | None]] = {}
    for name, traces in traces_by_algorithm.items():
        per_seed = [passes_to_thresholds(t, reference_risk, thresholds) for t in traces]
        merged = {}
        for thr in thresholds:
            vals = [p[thr] for p in per_seed]
            merged[thr] = None if any(v is None for v in vals) else float(np.median(vals))
        table[name] = merged
    names = sorted(table)
    speedups = {}
    for thr in thresholds:
        entry = {}
        for a in names:
            for b in names:
                if a < b and table[a][thr] is not None and table[b][thr] is not None and table[b][thr] > 0:
                    entry[f"{a}/{b}"] = (
                        float("inf") if table[b][thr] == 0 else table[a][thr] / table[b][thr]
                    )
        speedups[thr] = entry

    def winner(thr):
        reached = {a: table[a][thr] for a in names if table[a][thr] is not None}
        if not reached:
            return None
        return min(reached, key=reached.get)

    reached_by_any = [thr for thr in thresholds if winner(thr) is not None]
    loosest = max(reached_by_any) if reached_by_any else None
    reached_by_all = [
        thr for thr in thresholds if all(table[a][thr] is not None for a in names)
    ]
    tightest_common = min(reached_by_all) if reached_by_all else None
    return {
        "reference_risk": reference_risk,
        "thresholds": list(thresholds),
        "passes_to_threshold": {
            a: {f"{thr:g}": table[a][thr] for thr in thresholds} for a in names
        },
        "speedup_ratios": {f"{thr:g}": speedups[thr] for thr in thresholds},
        "early_phase_winner": winner(loosest) if loosest is not None else None,
        "tightest_common_threshold": tightest_common,
        "late_phase_winner": winner(tightest_common) if tightest_common is not None else None,
    }


def comparison_to_csv(report: dict, path) -> None:
    """Delimited form of the aggregate table: one row per (algorithm, threshold)."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("algorithm,threshold,data_passes\n")
        for algo in sorted(report["passes_to_threshold"]):
            row = report["passes_to_threshold"][algo]
            for thr in report["thresholds"]:
                val = row[f"{thr:g}"]
                fh.write(f"{algo},{thr:g},{'' if val is None else repr(val)}\n")


@dataclass
class RunArtifact:
    """In-memory handle on a completed experiment's outputs."""

    out_dir: Path
    config: ExperimentConfig
    constants: ProblemConstants | None
    traces: dict[tuple[str, int], Trace]
    comparison: dict
    index: dict


def _write_json(path: Path, payload) -> None:
    with open(path, "w", encoding="ascii") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_experiment(config: ExperimentConfig, out_dir) -> RunArtifact:
    """Execute a config end to end and write all artifacts under out_dir.

    Stages: data -> objective -> constants -> reference -> runs -> bounds
    -> compare -> figures -> index.  Any failure aborts with a StageError
    naming the stage; artifacts written so far are flagged incomplete in
    index.json when possible.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    index: dict = {"config": config.to_dict(), "files": [], "complete": False}

    def stage(name, fn):
        try:
            return fn()
        except Exception as exc:
            try:
                _write_json(out_dir / "index.json", index)
            except OSError:
                pass
            raise StageError(name, exc) from exc

    full = stage("data", lambda: build_dataset(config))
    train, test = stage(
        "data", lambda: split(full, config.train_fraction, config.split_seed)
    )
    objective = stage("objective", lambda: build_objective(config, train))
    w0_shared = initial_point(objective, config.seeds[0])

    constants = None
    reference = None
    reference_risk = None
    reference_objective = None
    if config.task in ("linreg", "logreg"):
        constants = stage(
            "constants",
            lambda: objective.estimate_constants(objective.default_domain_radius(w0_shared)),
        )
        if config.task == "linreg":
            reference = stage(
                "reference", lambda: ridge_closed_form(train, objective.lam)
            )
        else:
            reference = stage(
                "reference",
                lambda: gd_reference(objective, tol=1e-10),
            )
        reference_risk = objective.empirical_risk(reference)
        reference_objective = objective.regularized_risk(reference)
        index["constants"] = constants.to_dict()
        index["reference_train_risk"] = reference_risk
        index["reference_objective"] = reference_objective

    traces: dict[tuple[str, int], Trace] = {}
    for spec in config.algorithms:
        for seed in config.seeds:
            w0 = w0_shared if config.task != "mlp" else initial_point(objective, seed)
            trace = stage(
                f"run:{spec.name}:seed{seed}",
                lambda spec=spec, seed=seed, w0=w0: run_algorithm(
                    objective, spec, w0, seed, config.eval_every, test, reference
                ),
            )
            traces[(spec.name, seed)] = trace
            base = f"{spec.name}_seed{seed}"
            trace.to_csv(out_dir / f"{base}.csv")
            meta = {
                "task": config.task,
                "algorithm": spec.to_dict(),
                "seed": seed,
                "lambda": objective.lam,
                "n_train": train.n,
                "n_test": test.n,
                "d": train.d,
                "constants": constants.to_dict() if constants else None,
            }
            _write_json(out_dir / f"{base}.meta.json", meta)
            index["files"] += [f"{base}.csv", f"{base}.meta.json"]

    stage("bounds", lambda: _evaluate_bounds(
        config, objective, constants, reference, reference_risk, traces, out_dir, index
    ))

    grouped: dict[str, list[Trace]] = {}
    for (name, _seed), trace in traces.items():
        grouped.setdefault(name, []).append(trace)
    comparison = stage(
        "compare",
        lambda: compare_report(grouped, reference_objective, config.thresholds),
    )
    _write_json(out_dir / "comparison.json", comparison)
    comparison_to_csv(comparison, out_dir / "comparison.csv")
    index["files"] += ["comparison.json", "comparison.csv"]

    if config.figures:
        from .figures import render_run_figures

        figure_files = stage(
            "figures", lambda: render_run_figures(grouped, out_dir, config.task)
        )
        index["files"] += figure_files

    index["complete"] = True
    _write_json(out_dir / "index.json", index)
    index["files"].append("index.json")
    return RunArtifact(
        out_dir=out_dir,
        config=config,
        constants=constants,
        traces=traces,
        comparison=comparison,
        index=index,
    )


def _evaluate_bounds(
    config, objective, constants, reference, reference_risk, traces, out_dir, index
) -> None:
    specs = config.bound_specs
    if not specs:
        return
    if config.task in ("linreg", "logreg"):
        beta = bounds_mod.kernel_stability(
            constants.L, constants.K, objective.lam, objective.n
        )
        reference_reg = objective.regularized_risk(reference)
        for (name, seed), trace in traces.items():
            rho = bounds_mod.convergence_errors(
                trace, reference, reference_risk, reference_reg_risk=reference_reg
            )
            base = f"{name}_seed{seed}"
            if specs.get("expected"):
                report = bounds_mod.expected_bound(
                    beta, rho, constants.L, constants.gamma_out, objective.n
                )
                report.to_json(out_dir / f"{base}.bounds.expected.json")
                index["files"].append(f"{base}.bounds.expected.json")
            if "high_prob" in specs:
                report = bounds_mod.high_prob_bound(
                    beta, rho, constants.L, constants.gamma_out, constants.M,
                    objective.n, specs["high_prob"]["delta"],
                )
                report.to_json(out_dir / f"{base}.bounds.high_prob.json")
                index["files"].append(f"{base}.bounds.high_prob.json")
        return
    if "nonconvex" in specs:
        nc = specs["nonconvex"]
        for (name, seed), trace in traces.items():
            rho2 = trace.series("grad_norm_sq")
            min_rho2 = float(np.min(rho2[1:])) if len(rho2) > 1 else float(rho2[0])
            t1_reached = min_rho2 <= nc["gamma"] ** 2 * nc["epsilon0"] ** 2
            report = bounds_mod.nonconvex_bound(
                nc["beta0"], nc["L"], nc["mu"], min_rho2, nc["local_gap"],
                t1_reached=t1_reached,
            )
            base = f"{name}_seed{seed}"
            report.to_json(out_dir / f"{base}.bounds.nonconvex.json")
            index["files"].append(f"{base}.bounds.nonconvex.json")
