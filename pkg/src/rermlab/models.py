"""Prediction models with exact analytic gradients.

Parameters live in a single flat float64 vector per model; each model knows
how to predict, evaluate per-instance losses, and compute exact gradients of
the loss w.r.t. the flat parameter vector (manual backprop for the MLP).
Gradient evaluation is pure and uses a fixed accumulation order, so results
are deterministic across runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import losses
from .data import Instance
from .exceptions import NumericError


def _check_vector(name, v, length):
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (length,):
        raise ValueError(f"{name} has shape {v.shape}, expected ({length},)")
    return v


@dataclass(frozen=True)
class LinearModel:
    """Scalar-output linear model f(x) = <w, x> (+ optional unregularized bias).

    With `bias=True` the last parameter is an intercept appended after the d
    feature weights; the objective excludes it from the regularizer.
    """

    d: int
    bias: bool = False

    @property
    def p(self) -> int:
        return self.d + (1 if self.bias else 0)

    def check_loss(self, loss: str) -> str:
        losses.check_loss_kind(loss)
        if loss == losses.CROSS_ENTROPY:
            raise ValueError("cross_entropy loss requires a multiclass model")
        return loss

    def regularized_mask(self) -> np.ndarray:
        """1 for parameters included in the L2 regularizer, 0 for the bias."""
        mask = np.ones(self.p)
        if self.bias:
            mask[-1] = 0.0
        return mask

    def predict(self, w, x) -> float:
        w = _check_vector("w", w, self.p)
        x = _check_vector("x", x, self.d)
        out = float(w[: self.d] @ x)
        if self.bias:
            out += float(w[-1])
        return out

    def predict_batch(self, w, X) -> np.ndarray:
        w = _check_vector("w", w, self.p)
        out = X @ w[: self.d]
        if self.bias:
            out = out + w[-1]
        return out

    def loss_values(self, w, X, y, loss: str) -> np.ndarray:
        self.check_loss(loss)
        return losses.scalar_loss_value(loss, self.predict_batch(w, X), y)

    def loss_gradient(self, w, z: Instance, loss: str) -> np.ndarray:
        self.check_loss(loss)
        pred = self.predict(w, z.features)
        dpred = float(losses.scalar_loss_output_grad(loss, pred, z.label))
        grad = np.empty(self.p)
        grad[: self.d] = dpred * z.features
        if self.bias:
            grad[-1] = dpred
        return grad

    def mean_loss_gradient(self, w, X, y, loss: str) -> np.ndarray:
        self.check_loss(loss)
        preds = self.predict_batch(w, X)
        dpred = losses.scalar_loss_output_grad(loss, preds, y)
        grad = np.empty(self.p)
        grad[: self.d] = (X.T @ dpred) / X.shape[0]
        if self.bias:
            grad[-1] = float(np.mean(dpred))
        return grad

    def init_params(self, seed: int) -> np.ndarray:
        a = 1.0 / np.sqrt(self.d)
        return np.random.default_rng(seed).uniform(-a, a, self.p)

    def arch(self) -> dict:
        return {"model": "linear", "d": self.d, "bias": self.bias}


@dataclass(frozen=True)
class MlpModel:
    """One-hidden-layer MLP: d -> hidden (sigmoid) -> n_classes (softmax).

    Parameter packing order: W1 (hidden x d, row-major), b1 (hidden),
    W2 (n_classes x hidden, row-major), b2 (n_classes).
    """

    d: int
    hidden: int = 100
    n_classes: int = 10

    @property
    def p(self) -> int:
        return self.hidden * self.d + self.hidden + self.n_classes * self.hidden + self.n_classes

    def check_loss(self, loss: str) -> str:
        losses.check_loss_kind(loss)
        if loss != losses.CROSS_ENTROPY:
            raise ValueError(f"MLP model requires cross_entropy loss, got {loss!r}")
        return loss

    def regularized_mask(self) -> np.ndarray:
        return np.ones(self.p)

    def unpack(self, w):
        w = _check_vector("w", w, self.p)
        h, d, k = self.hidden, self.d, self.n_classes
        i = 0
        W1 = w[i : i + h * d].reshape(h, d); i += h * d
        b1 = w[i : i + h]; i += h
        W2 = w[i : i + k * h].reshape(k, h); i += k * h
        b2 = w[i : i + k]
        return W1, b1, W2, b2

    def pack(self, W1, b1, W2, b2) -> np.ndarray:
        return np.concatenate([W1.ravel(), b1.ravel(), W2.ravel(), b2.ravel()])

    def predict(self, w, x) -> np.ndarray:
        x = _check_vector("x", x, self.d)
        W1, b1, W2, b2 = self.unpack(w)
        a1 = losses.sigmoid(W1 @ x + b1)
        return losses.softmax(W2 @ a1 + b2)

    def predict_batch(self, w, X) -> np.ndarray:
        W1, b1, W2, b2 = self.unpack(w)
        A1 = losses.sigmoid(X @ W1.T + b1)
        return losses.softmax(A1 @ W2.T + b2)

    def loss_values(self, w, X, y, loss: str) -> np.ndarray:
        self.check_loss(loss)
        W1, b1, W2, b2 = self.unpack(w)
        A1 = losses.sigmoid(X @ W1.T + b1)
        logits = A1 @ W2.T + b2
        # -log softmax_y computed from logits directly for stability
        shifted = logits - logits.max(axis=1, keepdims=True)
        logz = np.log(np.exp(shifted).sum(axis=1))
        labels = y.astype(np.int64)
        return logz - shifted[np.arange(X.shape[0]), labels]

    def loss_gradient(self, w, z: Instance, loss: str) -> np.ndarray:
        self.check_loss(loss)
        x = _check_vector("x", z.features, self.d)
        W1, b1, W2, b2 = self.unpack(w)
        a1 = losses.sigmoid(W1 @ x + b1)
        probs = losses.softmax(W2 @ a1 + b2)
        delta2 = probs.copy()
        delta2[int(z.label)] -= 1.0
        delta1 = (W2.T @ delta2) * a1 * (1.0 - a1)
        return self.pack(np.outer(delta1, x), delta1, np.outer(delta2, a1), delta2)

    def mean_loss_gradient(self, w, X, y, loss: str) -> np.ndarray:
        self.check_loss(loss)
        n = X.shape[0]
        W1, b1, W2, b2 = self.unpack(w)
        A1 = losses.sigmoid(X @ W1.T + b1)
        P = losses.softmax(A1 @ W2.T + b2)
        D2 = P
        D2[np.arange(n), y.astype(np.int64)] -= 1.0
        D2 /= n
        D1 = (D2 @ W2) * A1 * (1.0 - A1)
        return self.pack(D1.T @ X, D1.sum(axis=0), D2.T @ A1, D2.sum(axis=0))

    def init_params(self, seed: int) -> np.ndarray:
        # symmetric uniform with layer-wise a = 1/sqrt(fan_in)
        rng = np.random.default_rng(seed)
        a1 = 1.0 / np.sqrt(self.d)
        a2 = 1.0 / np.sqrt(self.hidden)
        W1 = rng.uniform(-a1, a1, (self.hidden, self.d))
        b1 = rng.uniform(-a1, a1, self.hidden)
        W2 = rng.uniform(-a2, a2, (self.n_classes, self.hidden))
        b2 = rng.uniform(-a2, a2, self.n_classes)
        return self.pack(W1, b1, W2, b2)

    def arch(self) -> dict:
        return {"model": "mlp", "d": self.d, "hidden": self.hidden, "n_classes": self.n_classes}


def model_from_arch(arch: dict):
    kind = arch.get("model")
    if kind == "linear":
        return LinearModel(d=int(arch["d"]), bias=bool(arch.get("bias", False)))
    if kind == "mlp":
        return MlpModel(d=int(arch["d"]), hidden=int(arch["hidden"]), n_classes=int(arch["n_classes"]))
    raise ValueError(f"unknown model architecture {arch!r}")


def save_params(path, model, w) -> None:
    """Write a parameter vector as text: one JSON architecture header line,
    then one parameter value per line (full precision)."""
    w = _check_vector("w", w, model.p)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(json.dumps(model.arch(), sort_keys=True) + "\n")
        for v in w:
            fh.write(f"{float(v)!r}\n")


def load_params(path):
    """Read a parameter file written by `save_params`; returns (model, w)."""
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline()
        model = model_from_arch(json.loads(header))
        values = [float(line) for line in fh if line.strip()]
    w = np.asarray(values)
    if w.shape != (model.p,):
        raise NumericError(
            f"parameter file {path} has {w.size} values, architecture expects {model.p}"
        )
    return model, w
