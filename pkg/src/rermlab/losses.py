"""Per-instance loss functions and their derivatives w.r.t. the model output.

Three losses are supported:

* squared:        l = (f(x) - y)^2              (regression, scalar output)
* logistic:       l = log(1 + exp(-y f(x)))     (binary, scalar output, y in {-1,+1})
* cross_entropy:  l = -log p_y                  (multiclass, probability vector output)
"""

from __future__ import annotations

import numpy as np

SQUARED = "squared"
LOGISTIC = "logistic"
CROSS_ENTROPY = "cross_entropy"

LOSS_KINDS = (SQUARED, LOGISTIC, CROSS_ENTROPY)


def check_loss_kind(kind: str) -> str:
    if kind not in LOSS_KINDS:
        raise ValueError(f"unknown loss kind {kind!r}; expected one of {LOSS_KINDS}")
    return kind


def log1p_exp(t):
    """Numerically stable log(1 + exp(t))."""
    t = np.asarray(t, dtype=np.float64)
    return np.where(t > 0, t + np.log1p(np.exp(-np.abs(t))), np.log1p(np.exp(t)))


def sigmoid(t):
    t = np.asarray(t, dtype=np.float64)
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def squared_value(pred, y):
    return (np.asarray(pred) - np.asarray(y)) ** 2


def squared_output_grad(pred, y):
    """d/d_pred (pred - y)^2 = 2 (pred - y)."""
    return 2.0 * (np.asarray(pred) - np.asarray(y))


def logistic_value(pred, y):
    return log1p_exp(-np.asarray(y) * np.asarray(pred))


def logistic_output_grad(pred, y):
    """d/d_pred log(1 + e^{-y pred}) = -y sigma(-y pred)."""
    y = np.asarray(y)
    return -y * sigmoid(-y * np.asarray(pred))


def softmax(logits):
    """Row-wise stable softmax; accepts a vector or a matrix of row logits."""
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy_value(probs, label):
    """-log p_y for a probability vector (or matrix of rows) and class index."""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim == 1:
        return -np.log(probs[int(label)])
    labels = np.asarray(label, dtype=np.int64)
    return -np.log(probs[np.arange(probs.shape[0]), labels])


def scalar_loss_value(kind: str, pred, y):
    """Loss value for scalar-output (linear) models."""
    if kind == SQUARED:
        return squared_value(pred, y)
    if kind == LOGISTIC:
        return logistic_value(pred, y)
    raise ValueError(f"loss {kind!r} is not a scalar-output loss")


def scalar_loss_output_grad(kind: str, pred, y):
    """Derivative of the loss w.r.t. the scalar model output."""
    if kind == SQUARED:
        return squared_output_grad(pred, y)
    if kind == LOGISTIC:
        return logistic_output_grad(pred, y)
    raise ValueError(f"loss {kind!r} is not a scalar-output loss")
