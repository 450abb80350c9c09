"""Regularized objective values, gradients, and problem constants."""

import numpy as np
import pytest

from rermlab import losses
from rermlab.data import Dataset, generate_gaussian_binary, generate_gaussian_regression
from rermlab.exceptions import NumericError
from rermlab.models import LinearModel, MlpModel
from rermlab.objective import Objective, extreme_eigenvalues, power_iteration


def _ridge(n=50, d=4, lam=0.1, seed=0, noise=0.1):
    ds, _ = generate_gaussian_regression(n, d, noise_sd=noise, seed=seed)
    return Objective(ds, LinearModel(d), losses.SQUARED, lam)


def test_logistic_risk_at_origin_is_log_two():
    ds, _ = generate_gaussian_binary(64, 5, seed=0)
    obj = Objective(ds, LinearModel(5), losses.LOGISTIC, 0.01)
    assert obj.empirical_risk(np.zeros(5)) == pytest.approx(np.log(2.0), abs=1e-12)
    assert obj.regularized_risk(np.zeros(5)) == pytest.approx(np.log(2.0), abs=1e-12)


def test_regularizer_identity():
    obj = _ridge(lam=0.3)
    rng = np.random.default_rng(1)
    w = rng.standard_normal(4)
    assert obj.regularized_risk(w) - obj.empirical_risk(w) == pytest.approx(
        0.3 * float(w @ w), abs=1e-12
    )


def test_bias_excluded_from_regularizer():
    ds, _ = generate_gaussian_regression(20, 3, seed=0)
    obj = Objective(ds, LinearModel(3, bias=True), losses.SQUARED, 0.5)
    w = np.asarray([1.0, 2.0, 3.0, 100.0])
    assert obj.reg_norm_sq(w) == pytest.approx(14.0)


def test_mean_of_stochastic_gradients_is_full_gradient():
    obj = _ridge(n=30, lam=0.2)
    rng = np.random.default_rng(2)
    w = rng.standard_normal(4)
    mean = np.mean([obj.stochastic_gradient(w, i) for i in range(obj.n)], axis=0)
    assert np.allclose(mean, obj.full_gradient(w), atol=1e-12)


def test_stochastic_gradient_index_bounds():
    obj = _ridge(n=10)
    with pytest.raises(ValueError):
        obj.stochastic_gradient(np.zeros(4), 10)
    with pytest.raises(ValueError):
        obj.stochastic_gradient(np.zeros(4), -1)


def test_empirical_risk_on_held_out_set():
    obj = _ridge(n=40, seed=3)
    other, _ = generate_gaussian_regression(15, 4, noise_sd=0.1, seed=99)
    w = np.zeros(4)
    expect = float(np.mean(other.y**2))
    assert obj.empirical_risk(w, other) == pytest.approx(expect, abs=1e-12)


def test_gradient_descent_decreases_objective():
    obj = _ridge(n=100, d=6, lam=0.1, seed=4)
    w = np.zeros(6)
    prev = obj.regularized_risk(w)
    for _ in range(20):
        w = w - 0.05 * obj.full_gradient(w)
        cur = obj.regularized_risk(w)
        assert cur <= prev + 1e-12
        prev = cur


def test_power_iteration_matches_dense_eigensolver():
    rng = np.random.default_rng(5)
    A = rng.standard_normal((6, 6))
    H = A @ A.T
    lam, vec = power_iteration(H, tol=1e-10)
    dense = np.linalg.eigvalsh(H)
    assert lam == pytest.approx(dense[-1], rel=1e-6)
    assert np.linalg.norm(H @ vec - lam * vec) <= 1e-6 * lam


def test_extreme_eigenvalues_match_dense_eigensolver():
    rng = np.random.default_rng(6)
    A = rng.standard_normal((8, 3))
    H = A.T @ A / 8 + 0.05 * np.eye(3)
    hi, lo = extreme_eigenvalues(H, tol=1e-10)
    dense = np.linalg.eigvalsh(H)
    assert hi == pytest.approx(dense[-1], rel=1e-6)
    assert lo == pytest.approx(dense[0], rel=1e-6)


def test_power_iteration_iteration_cap_raises():
    rng = np.random.default_rng(7)
    A = rng.standard_normal((5, 5))
    H = A @ A.T
    with pytest.raises(NumericError):
        power_iteration(H, tol=1e-14, max_iter=2)


def test_estimate_constants_identity_design():
    # X = I with lambda=0: hessian is (2/n) I, so kappa = 1 exactly
    X = np.eye(4)
    ds = Dataset(X, np.ones(4), "regression")
    obj = Objective(ds, LinearModel(4), losses.SQUARED, 0.0)
    c = obj.estimate_constants(domain_radius=2.0)
    assert c.gamma_w == pytest.approx(0.5, rel=1e-6)
    assert c.mu == pytest.approx(0.5, rel=1e-6)
    assert c.kappa == pytest.approx(1.0, rel=1e-5)
    assert c.K == 1.0
    assert c.gamma_out == 2.0
    # output bound K*B + max|y| = 3, so L = 6 and M = 9
    assert c.L == pytest.approx(6.0)
    assert c.M == pytest.approx(9.0)


def test_estimate_constants_ridge_matches_dense_hessian():
    obj = _ridge(n=60, d=3, lam=0.2, seed=8)
    c = obj.estimate_constants(domain_radius=5.0)
    H = (2.0 / 60) * (obj.dataset.X.T @ obj.dataset.X) + 2 * 0.2 * np.eye(3)
    dense = np.linalg.eigvalsh(H)
    assert c.gamma_w == pytest.approx(dense[-1], rel=1e-6)
    assert c.mu == pytest.approx(dense[0], rel=1e-6)
    assert c.kappa == pytest.approx(dense[-1] / dense[0], rel=1e-5)


def test_estimate_constants_logistic_strong_convexity_witness():
    ds, _ = generate_gaussian_binary(80, 4, seed=9)
    obj = Objective(ds, LinearModel(4), losses.LOGISTIC, 0.05)
    c = obj.estimate_constants(domain_radius=3.0)
    assert c.mu == pytest.approx(2 * 0.05)
    assert c.L == 1.0 and c.gamma_out == 0.25
    # the smoothness constant must dominate the dense hessian bound
    lam_max = np.linalg.eigvalsh(ds.X.T @ ds.X / 80)[-1]
    assert c.gamma_w == pytest.approx(0.25 * lam_max + 0.1, rel=1e-6)
    assert c.M == pytest.approx(np.log1p(np.exp(c.K * 3.0)), rel=1e-9)


def test_estimate_constants_rejects_mlp_and_bad_radius():
    from rermlab.data import generate_gaussian_multiclass

    ds, _ = generate_gaussian_multiclass(20, 3, k=3, seed=0)
    obj = Objective(ds, MlpModel(3, hidden=4, n_classes=3), losses.CROSS_ENTROPY, 0.1)
    with pytest.raises(ValueError):
        obj.estimate_constants(domain_radius=1.0)
    ridge = _ridge()
    with pytest.raises(ValueError):
        ridge.estimate_constants(domain_radius=0.0)


def test_estimate_constants_zero_lambda_rank_deficient_raises():
    X = np.asarray([[1.0, 0.0], [2.0, 0.0]])
    ds = Dataset(X, np.asarray([1.0, 2.0]), "regression")
    obj = Objective(ds, LinearModel(2), losses.SQUARED, 0.0)
    with pytest.raises(NumericError):
        obj.estimate_constants(domain_radius=1.0)


def test_default_domain_radius_level_set_bound():
    obj = _ridge(lam=0.4, seed=10)
    w0 = np.zeros(4)
    r = obj.default_domain_radius(w0)
    assert r == pytest.approx(2.0 * np.sqrt(obj.regularized_risk(w0) / 0.4))
    zero_lam = Objective(obj.dataset, obj.model, losses.SQUARED, 0.0)
    assert zero_lam.default_domain_radius(np.zeros(4)) == 2.0


def test_objective_validation():
    ds, _ = generate_gaussian_regression(10, 3, seed=0)
    with pytest.raises(ValueError):
        Objective(ds, LinearModel(3), losses.SQUARED, -0.1)
    with pytest.raises(ValueError):
        Objective(ds, LinearModel(3), losses.LOGISTIC, 0.1)
    with pytest.raises(ValueError):
        Objective(ds, LinearModel(4), losses.SQUARED, 0.1)
