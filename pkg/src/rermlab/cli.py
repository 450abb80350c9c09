"""Command-line interface.

Subcommands: run, compare, check-gradients, stability-audit, bounds.
Exit code 0 on success; failures exit nonzero with the failing stage named.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import bounds as bounds_mod
from . import losses
from .data import Dataset, generate_gaussian_binary
from .exceptions import RermlabError, StageError
from .harness import ExperimentConfig, compare_report, comparison_to_csv, run_experiment
from .models import LinearModel, MlpModel
from .objective import Objective
from .optim import Trace
from .oracles import finite_diff_gradient


@click.group()
def main():
    """Regularized ERM toolkit: optimizer benchmarking and stability bounds."""


def _fail(stage: str, exc: Exception):
    click.echo(f"error in stage '{stage}': {exc}", err=True)
    sys.exit(1)


@main.command("run")
@click.argument("config_file", type=click.Path(exists=True))
@click.option("--out", default="runs/out", show_default=True, help="Output directory.")
@click.option("--seed", type=int, default=None, help="Override the config's seed list.")
@click.option("--paper-scale", is_flag=True, help="Scale synthetic data up to n=40000.")
@click.option("--no-figures", is_flag=True, help="Skip figure rendering.")
def run_cmd(config_file, out, seed, paper_scale, no_figures):
    """Run the experiment described by a JSON CONFIG_FILE."""
    try:
        raw = json.loads(Path(config_file).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        _fail("config", exc)
    if seed is not None:
        raw["seeds"] = [seed]
    if paper_scale and raw.get("data", {}).get("source", "synthetic") == "synthetic":
        raw["data"]["n"] = 40000
    if no_figures:
        raw["figures"] = False
    try:
        config = ExperimentConfig.from_dict(raw)
        artifact = run_experiment(config, out)
    except StageError as exc:
        _fail(exc.stage, exc.cause)
    except RermlabError as exc:
        _fail("config", exc)
    click.echo(f"wrote {len(artifact.index['files'])} artifacts to {artifact.out_dir}")
    comp = artifact.comparison
    click.echo(
        f"early-phase winner: {comp['early_phase_winner']}, "
        f"late-phase winner: {comp['late_phase_winner']} "
        f"(tightest common threshold: {comp['tightest_common_threshold']})"
    )


@main.command("compare")
@click.argument("artifact_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--out", default=None, help="Directory for the summary (default: artifact dir).")
def compare_cmd(artifact_dir, out):
    """Aggregate ordering summary over the trace CSVs in ARTIFACT_DIR."""
    artifact_dir = Path(artifact_dir)
    out_dir = Path(out) if out else artifact_dir
    traces: dict[str, list[Trace]] = {}
    for csv_path in sorted(artifact_dir.glob("*_seed*.csv")):
        algo = csv_path.stem.rsplit("_seed", 1)[0]
        traces.setdefault(algo, []).append(Trace.from_csv(csv_path, algorithm=algo))
    if len(traces) < 2:
        _fail("compare", ValueError(f"need >= 2 algorithm traces in {artifact_dir}"))
    reference_risk = None
    index_path = artifact_dir / "index.json"
    if index_path.exists():
        reference_risk = json.loads(index_path.read_text()).get("reference_objective")
    try:
        report = compare_report(traces, reference_risk)
    except RermlabError as exc:
        _fail("compare", exc)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "comparison.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    comparison_to_csv(report, out_dir / "comparison.csv")
    from .figures import render_comparison_figure

    render_comparison_figure(report, out_dir)
    click.echo(json.dumps(report["passes_to_threshold"], indent=2))
    click.echo(
        f"early-phase winner: {report['early_phase_winner']}, "
        f"late-phase winner: {report['late_phase_winner']}"
    )


def gradient_check_suite(probes: int = 30, seed: int = 0, h: float = 1e-5) -> dict[str, float]:
    """Max relative error between analytic and central-finite-difference
    per-instance gradients for each supported (model, loss) pair."""
    rng = np.random.default_rng(seed)
    results: dict[str, float] = {}
    cases = [
        ("linear/squared", LinearModel(8), losses.SQUARED, lambda: float(rng.standard_normal())),
        ("linear/logistic", LinearModel(8), losses.LOGISTIC, lambda: float(rng.choice([-1.0, 1.0]))),
        (
            "mlp/cross_entropy",
            MlpModel(6, hidden=12, n_classes=5),
            losses.CROSS_ENTROPY,
            lambda: float(rng.integers(0, 5)),
        ),
    ]
    from .data import Instance

    for name, model, loss, draw_label in cases:
        worst = 0.0
        for _ in range(probes):
            w = rng.standard_normal(model.p) * 0.5
            z = Instance(features=rng.standard_normal(model.d), label=draw_label())
            analytic = model.loss_gradient(w, z, loss)
            numeric = finite_diff_gradient(
                lambda v: float(
                    model.loss_values(v, z.features[None, :], np.asarray([z.label]), loss)[0]
                ),
                w,
                h=h,
            )
            err = float(np.max(np.abs(analytic - numeric)) / (1.0 + np.max(np.abs(analytic))))
            worst = max(worst, err)
        results[name] = worst
    return results


@main.command("check-gradients")
@click.option("--probes", type=int, default=30, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--tolerance", type=float, default=1e-4, show_default=True)
def check_gradients_cmd(probes, seed, tolerance):
    """Verify analytic gradients against central finite differences."""
    results = gradient_check_suite(probes=probes, seed=seed)
    failed = False
    for name, err in results.items():
        status = "ok" if err <= tolerance else "FAIL"
        if err > tolerance:
            failed = True
        click.echo(f"{name}: max relative error {err:.3e} [{status}]")
    if failed:
        _fail("check-gradients", RuntimeError("gradient check exceeded tolerance"))


@main.command("stability-audit")
@click.option("--n", type=int, default=100, show_default=True)
@click.option("--d", type=int, default=10, show_default=True)
@click.option("--lam", "lam", type=float, default=0.1, show_default=True)
@click.option("--trials", type=int, default=200, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def stability_audit_cmd(n, d, lam, trials, seed):
    """Measure replace-one stability of logistic regression against the
    closed-form constants."""
    dataset, _ = generate_gaussian_binary(n, d, seed)

    def builder(ds: Dataset) -> Objective:
        return Objective(ds, LinearModel(ds.d), losses.LOGISTIC, lam)

    try:
        loss_change, output_change = bounds_mod.empirical_stability(
            builder, dataset, trials, seed
        )
    except RermlabError as exc:
        _fail("stability-audit", exc)
    K = float(np.max(np.linalg.norm(dataset.X, axis=1)))
    beta = bounds_mod.kernel_stability(1.0, K, lam, n)
    ok0 = loss_change <= beta.beta0
    ok1 = output_change <= beta.beta1
    click.echo(f"measured max loss change   {loss_change:.6e} <= beta0 {beta.beta0:.6e}: {ok0}")
    click.echo(f"measured max output change {output_change:.6e} <= beta1 {beta.beta1:.6e}: {ok1}")
    if not (ok0 and ok1):
        _fail("stability-audit", RuntimeError("measured stability violates closed form"))


@main.command("bounds")
@click.argument("inputs_file", type=click.Path(exists=True))
@click.option("--out", default=None, help="Write the report JSON here instead of stdout.")
def bounds_cmd(inputs_file, out):
    """Evaluate a generalization bound from a report-inputs JSON file.

    The file holds {"kind": "expected"|"high_prob"|"nonconvex", ...inputs},
    with rho/beta values under their spec names (beta0, beta1, rho0, rho1,
    min_rho2, L, gamma, M, n, delta, mu, local_gap, t1_reached).
    """
    raw = json.loads(Path(inputs_file).read_text())
    kind = raw.get("kind")
    try:
        if kind == "expected":
            beta = bounds_mod.StabilityConstants(raw["beta0"], raw["beta1"])
            rho = _rho_from_raw(raw)
            report = bounds_mod.expected_bound(beta, rho, raw["L"], raw["gamma"], raw["n"])
        elif kind == "high_prob":
            beta = bounds_mod.StabilityConstants(raw["beta0"], raw["beta1"])
            rho = _rho_from_raw(raw)
            report = bounds_mod.high_prob_bound(
                beta, rho, raw["L"], raw["gamma"], raw["M"], raw["n"], raw["delta"]
            )
        elif kind == "nonconvex":
            report = bounds_mod.nonconvex_bound(
                raw["beta0"], raw["L"], raw["mu"], raw["min_rho2"], raw["local_gap"],
                t1_reached=raw.get("t1_reached", False),
            )
        else:
            raise ValueError(f"unknown bound kind {kind!r}")
    except (KeyError, ValueError, RermlabError) as exc:
        _fail("bounds", exc)
    text = report.to_json(out)
    if out is None:
        click.echo(text)
    else:
        click.echo(f"wrote {out}")


def _rho_from_raw(raw) -> bounds_mod.ConvergenceErrors:
    empty = np.empty(0)
    return bounds_mod.ConvergenceErrors(
        rho0=raw.get("rho0", 0.0),
        rho1=raw.get("rho1", 0.0),
        rho2=raw.get("rho2", 0.0),
        rho0_series=empty,
        rho1_series=empty,
        rho2_series=empty,
        data_passes=empty,
    )


if __name__ == "__main__":
    main()
