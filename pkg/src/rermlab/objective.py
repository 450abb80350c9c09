"""The regularized empirical-risk objective and its problem constants.

The objective is

    reg_risk(w) = (1/n) sum_i l(w, z_i) + lambda * ||w||^2

with the L2 norm taken over the regularized parameters (a linear-model bias,
when enabled, is excluded).  Stochastic gradients include the full
regularizer gradient 2*lambda*w each step, so averaging them over all
instances reproduces the full gradient exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import losses
from .data import BINARY, MULTICLASS, REGRESSION, Dataset
from .exceptions import NumericError
from .models import LinearModel, MlpModel

_TASK_LOSS = {
    REGRESSION: losses.SQUARED,
    BINARY: losses.LOGISTIC,
    MULTICLASS: losses.CROSS_ENTROPY,
}


@dataclass(frozen=True)
class ProblemConstants:
    """Constants consumed by the generalization bounds.

    L, gamma_out, M are certified on the ball ||w|| <= domain_radius (the
    squared loss is not globally Lipschitz); gamma_w and mu are the
    smoothness / strong-convexity constants of the regularized objective in
    parameter space, and kappa = gamma_w / mu.
    """

    L: float
    gamma_out: float
    gamma_w: float
    mu: float
    kappa: float
    K: float
    M: float
    domain_radius: float

    def to_dict(self) -> dict:
        return {
            "L": self.L,
            "gamma_out": self.gamma_out,
            "gamma_w": self.gamma_w,
            "mu": self.mu,
            "kappa": self.kappa,
            "K": self.K,
            "M": self.M,
            "domain_radius": self.domain_radius,
        }


def power_iteration(H: np.ndarray, tol: float = 1e-8, max_iter: int = 200_000, seed: int = 0):
    """Dominant eigenvalue of a symmetric PSD matrix by power iteration.

    Stops when the residual ||H x - lam x|| falls below tol * max(1, lam).
    Raises NumericError with diagnostics if the cap is hit.
    """
    dim = H.shape[0]
    if dim == 1:
        return float(H[0, 0]), np.ones(1)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(dim)
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(max_iter):
        y = H @ x
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0, x
        x_new = y / norm
        lam = float(x_new @ (H @ x_new))
        residual = np.linalg.norm(H @ x_new - lam * x_new)
        x = x_new
        if residual <= tol * max(1.0, abs(lam)):
            return lam, x
    raise NumericError(
        f"power iteration did not converge in {max_iter} iterations "
        f"(dim={dim}, last eigenvalue estimate {lam:.6e}, residual {residual:.3e})"
    )


def extreme_eigenvalues(H: np.ndarray, tol: float = 1e-8, seed: int = 0):
    """(lam_max, lam_min) of a symmetric PSD matrix via power iteration.

    The smallest eigenvalue comes from a second power iteration on the
    spectrally flipped matrix shift*I - H.
    """
    lam_max, _ = power_iteration(H, tol=tol, seed=seed)
    shift = lam_max * 1.0001 + tol
    flipped = shift * np.eye(H.shape[0]) - H
    lam_flip, _ = power_iteration(flipped, tol=tol, seed=seed + 1)
    return lam_max, shift - lam_flip


@dataclass(frozen=True)
class Objective:
    """Dataset + model + loss + L2 regularization coefficient."""

    dataset: Dataset
    model: LinearModel | MlpModel
    loss: str
    lam: float

    def __post_init__(self):
        self.model.check_loss(self.loss)
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        expected = _TASK_LOSS[self.dataset.task]
        if self.loss != expected:
            raise ValueError(
                f"loss {self.loss!r} incompatible with task {self.dataset.task!r} "
                f"(expected {expected!r})"
            )
        if self.model.d != self.dataset.d:
            raise ValueError(
                f"model dimension {self.model.d} != dataset dimension {self.dataset.d}"
            )

    @property
    def n(self) -> int:
        return self.dataset.n

    def reg_norm_sq(self, w) -> float:
        mask = self.model.regularized_mask()
        return float(np.sum(mask * np.asarray(w) ** 2))

    def empirical_risk(self, w, dataset: Dataset | None = None) -> float:
        """Mean per-instance loss; pass a held-out set to estimate test risk."""
        ds = self.dataset if dataset is None else dataset
        if ds.n == 0:
            raise ValueError("cannot evaluate risk on an empty dataset")
        return float(np.sum(self.model.loss_values(w, ds.X, ds.y, self.loss)) / ds.n)

    def regularized_risk(self, w) -> float:
        return self.empirical_risk(w) + self.lam * self.reg_norm_sq(w)

    def full_gradient(self, w) -> np.ndarray:
        grad = self.model.mean_loss_gradient(w, self.dataset.X, self.dataset.y, self.loss)
        return grad + 2.0 * self.lam * self.model.regularized_mask() * np.asarray(w)

    def stochastic_gradient(self, w, i: int) -> np.ndarray:
        """Per-instance loss gradient plus the full regularizer gradient."""
        if not 0 <= i < self.n:
            raise ValueError(f"instance index {i} out of range for n={self.n}")
        grad = self.model.loss_gradient(w, self.dataset.instance(i), self.loss)
        return grad + 2.0 * self.lam * self.model.regularized_mask() * np.asarray(w)

    def default_domain_radius(self, w0) -> float:
        """Twice the radius of the initial level set {w: reg_risk(w) <= reg_risk(w0)}.

        Any such w satisfies lambda ||w||^2 <= reg_risk(w0), giving the bound
        sqrt(reg_risk(w0) / lambda); falls back to 2 max(1, ||w0||) at lambda=0.
        """
        w0 = np.asarray(w0)
        if self.lam > 0:
            return 2.0 * float(np.sqrt(self.regularized_risk(w0) / self.lam))
        return 2.0 * max(1.0, float(np.linalg.norm(w0)))

    def estimate_constants(self, domain_radius: float, eig_tol: float = 1e-8) -> ProblemConstants:
        """Problem constants for the bounds, certified on the given ball.

        Supported for linear models only (squared / logistic loss); the MLP's
        parameter-space constants have no closed form and must be supplied as
        user assumptions to the nonconvex bound.
        """
        if domain_radius <= 0:
            raise ValueError(f"domain_radius must be > 0, got {domain_radius}")
        if not isinstance(self.model, LinearModel):
            raise ValueError("estimate_constants supports linear models only")
        X, y = self.dataset.X, self.dataset.y
        n = self.n
        K = float(np.max(np.linalg.norm(X, axis=1)))
        B = domain_radius
        if self.model.bias:
            # bias column enters the curvature but not the regularizer
            X = np.hstack([X, np.ones((n, 1))])
        reg_diag = 2.0 * self.lam * self.model.regularized_mask()
        if self.loss == losses.SQUARED:
            out_bound = K * B + float(np.max(np.abs(y)))
            L = 2.0 * out_bound
            gamma_out = 2.0
            M = out_bound**2
            H = (2.0 / n) * (X.T @ X) + np.diag(reg_diag)
            gamma_w, mu = extreme_eigenvalues(H, tol=eig_tol)
        else:  # logistic
            L = 1.0
            gamma_out = 0.25
            M = float(losses.log1p_exp(K * B))
            lam_max, _ = power_iteration((X.T @ X) / n, tol=eig_tol)
            gamma_w = 0.25 * lam_max + 2.0 * self.lam
            # safe lower bound: the logistic Hessian part is only PSD
            mu = 2.0 * self.lam
        if mu <= 0:
            raise NumericError(
                f"strong-convexity constant is not positive (mu={mu:.3e}); "
                "lambda may be zero on a rank-deficient design"
            )
        return ProblemConstants(
            L=L, gamma_out=gamma_out, gamma_w=gamma_w, mu=mu,
            kappa=gamma_w / mu, K=K, M=M, domain_radius=B,
        )
