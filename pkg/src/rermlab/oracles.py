"""Reference solvers and gradient oracles.

These provide the certified reference minimizers that the convergence
errors and stability measurements compare against: a closed-form ridge
solve, a high-accuracy GD solve for smooth strongly convex objectives, and
a central finite-difference gradient.
"""

from __future__ import annotations

import numpy as np

from . import losses
from .data import Dataset
from .exceptions import NumericError
from .models import LinearModel
from .objective import Objective


def ridge_closed_form(dataset: Dataset, lam: float, bias: bool = False) -> np.ndarray:
    """Exact minimizer of mean squared loss plus lam * ||w||^2.

    Solves ((2/n) X^T X + 2 lam I) w = (2/n) X^T y and verifies the
    regularized-risk gradient at the solution has norm <= 1e-8.
    """
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    X, y = dataset.X, dataset.y
    n = dataset.n
    if bias:
        X = np.hstack([X, np.ones((n, 1))])
    reg = np.full(X.shape[1], 2.0 * lam)
    if bias:
        reg[-1] = 0.0
    A = (2.0 / n) * (X.T @ X) + np.diag(reg)
    b = (2.0 / n) * (X.T @ y)
    try:
        w = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"ridge linear solve failed: {exc}") from exc
    residual = A @ w - b
    if np.linalg.norm(residual) > 1e-8 * max(1.0, np.linalg.norm(b)):
        raise NumericError(
            f"ridge solution residual {np.linalg.norm(residual):.3e} exceeds tolerance"
        )
    objective = Objective(dataset, LinearModel(dataset.d, bias=bias), losses.SQUARED, lam)
    grad_norm = float(np.linalg.norm(objective.full_gradient(w)))
    if grad_norm > 1e-6 * max(1.0, float(np.linalg.norm(b))):
        raise NumericError(f"ridge solution gradient norm {grad_norm:.3e} fails self-check")
    return w


def finite_diff_gradient(f, w, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient (f(w + h e_i) - f(w - h e_i)) / (2h)."""
    if h <= 0:
        raise ValueError(f"h must be > 0, got {h}")
    w = np.asarray(w, dtype=np.float64)
    grad = np.empty(w.shape[0])
    for i in range(w.shape[0]):
        step = np.zeros_like(w)
        step[i] = h
        grad[i] = (f(w + step) - f(w - step)) / (2.0 * h)
    return grad


def gd_reference(
    objective: Objective,
    tol: float = 1e-10,
    max_iter: int = 2_000_000,
    w0=None,
    eta: float | None = None,
) -> np.ndarray:
    """High-accuracy GD solve of a smooth convex objective.

    Runs w <- w - eta * grad with eta = 1/gamma_w (estimated from the
    objective unless given) until the gradient norm is <= tol; raises
    NumericError if the iteration cap is hit.
    """
    w = (
        np.zeros(objective.model.p)
        if w0 is None
        else np.asarray(w0, dtype=np.float64).copy()
    )
    if eta is None:
        constants = objective.estimate_constants(objective.default_domain_radius(w))
        eta = 1.0 / constants.gamma_w
    for _ in range(max_iter):
        grad = objective.full_gradient(w)
        if float(np.linalg.norm(grad)) <= tol:
            return w
        w -= eta * grad
    raise NumericError(
        f"reference GD failed to reach gradient norm {tol:.1e} in {max_iter} iterations "
        f"(last norm {float(np.linalg.norm(grad)):.3e})"
    )


def solve_reference(objective: Objective, tol: float = 1e-10) -> np.ndarray:
    """Certified minimizer: closed form for ridge, high-accuracy GD otherwise."""
    if isinstance(objective.model, LinearModel) and objective.loss == losses.SQUARED:
        return ridge_closed_form(objective.dataset, objective.lam, bias=objective.model.bias)
    return gd_reference(objective, tol=tol)
