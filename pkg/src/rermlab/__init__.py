"""Regularized empirical-risk-minimization toolkit.

Benchmarks GD, SGD, and SVRG on regularized ERM problems and evaluates
stability-based generalization bounds alongside the training runs.
"""

from .data import (
    Dataset,
    Instance,
    bundled_dataset_path,
    generate_gaussian_binary,
    generate_gaussian_multiclass,
    generate_gaussian_regression,
    paper_style_feature_scales,
    parse_libsvm,
    remove_instance,
    replace_instance,
    serialize_libsvm,
    split,
)
from .models import LinearModel, MlpModel, load_params, save_params
from .objective import Objective, ProblemConstants, extreme_eigenvalues, power_iteration
from .optim import StepSchedule, Trace, run_gd, run_sgd, run_svrg, svrg_direction
from .oracles import finite_diff_gradient, gd_reference, ridge_closed_form, solve_reference
from .bounds import (
    BoundReport,
    ConvergenceErrors,
    StabilityConstants,
    convergence_errors,
    corollary_orders,
    empirical_stability,
    expected_bound,
    high_prob_bound,
    kernel_stability,
    nonconvex_bound,
    sufficient_training,
)
from .harness import (
    AlgorithmSpec,
    ExperimentConfig,
    RunArtifact,
    compare_report,
    run_experiment,
)

__version__ = "0.1.0"

__all__ = [
    "AlgorithmSpec",
    "BoundReport",
    "ConvergenceErrors",
    "Dataset",
    "ExperimentConfig",
    "Instance",
    "LinearModel",
    "MlpModel",
    "Objective",
    "ProblemConstants",
    "RunArtifact",
    "StabilityConstants",
    "bundled_dataset_path",
    "StepSchedule",
    "Trace",
    "compare_report",
    "convergence_errors",
    "corollary_orders",
    "empirical_stability",
    "expected_bound",
    "extreme_eigenvalues",
    "finite_diff_gradient",
    "gd_reference",
    "generate_gaussian_binary",
    "generate_gaussian_multiclass",
    "generate_gaussian_regression",
    "high_prob_bound",
    "kernel_stability",
    "load_params",
    "nonconvex_bound",
    "paper_style_feature_scales",
    "parse_libsvm",
    "power_iteration",
    "remove_instance",
    "replace_instance",
    "ridge_closed_form",
    "run_experiment",
    "run_gd",
    "run_sgd",
    "run_svrg",
    "save_params",
    "serialize_libsvm",
    "solve_reference",
    "split",
    "sufficient_training",
    "svrg_direction",
]
