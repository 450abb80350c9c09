"""Matplotlib figure rendering for run and comparison artifacts.

Renders the three-figure layout of the experimental protocol: training
loss, test loss, and log-scaled test loss against the number of data
passes, one curve per algorithm (seed 0 curve plain, extra seeds faint).
Figures are written as PNG files next to the CSV artifacts.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .optim import Trace  # noqa: E402

_COLORS = {"gd": "tab:blue", "sgd": "tab:orange", "svrg": "tab:green"}


def _plot_metric(traces_by_algorithm, metric: str, ylabel: str, title: str, path, log_y=False):
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    for name in sorted(traces_by_algorithm):
        for i, trace in enumerate(traces_by_algorithm[name]):
            ax.plot(
                trace.series("data_passes"),
                trace.series(metric),
                color=_COLORS.get(name, "tab:gray"),
                alpha=1.0 if i == 0 else 0.35,
                label=name.upper() if i == 0 else None,
            )
    if log_y:
        ax.set_yscale("log")
    ax.set_xlabel("data passes")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_run_figures(
    traces_by_algorithm: dict[str, list[Trace]], out_dir, task: str
) -> list[str]:
    """Write train-loss, test-loss, and log-test-loss figures; returns the
    written file names (relative to out_dir)."""
    out_dir = Path(out_dir)
    files = []
    for metric, ylabel, suffix, log_y in (
        ("train_risk", "training loss", "train_loss", False),
        ("test_risk", "test loss", "test_loss", False),
        ("test_risk", "test loss (log scale)", "test_loss_log", True),
    ):
        name = f"{task}_{suffix}.png"
        _plot_metric(
            traces_by_algorithm, metric, ylabel, task, out_dir / name, log_y=log_y
        )
        files.append(name)
    return files


def render_comparison_figure(report: dict, out_dir) -> list[str]:
    """Bar chart of data passes to each threshold per algorithm."""
    out_dir = Path(out_dir)
    thresholds = report["thresholds"]
    algos = sorted(report["passes_to_threshold"])
    fig, ax = plt.subplots(figsize=(6.0, 3.4))
    width = 0.8 / max(1, len(algos))
    for j, algo in enumerate(algos):
        xs, ys = [], []
        for i, thr in enumerate(thresholds):
            val = report["passes_to_threshold"][algo][f"{thr:g}"]
            if val is not None:
                xs.append(i + j * width)
                ys.append(max(val, 1e-3))
        ax.bar(xs, ys, width=width, color=_COLORS.get(algo, "tab:gray"), label=algo.upper())
    ax.set_yscale("log")
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(thresholds))])
    ax.set_xticklabels([f"{t:g}" for t in thresholds], rotation=45)
    ax.set_xlabel("relative training-loss threshold")
    ax.set_ylabel("data passes")
    ax.legend()
    fig.tight_layout()
    path = out_dir / "comparison.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return ["comparison.png"]
