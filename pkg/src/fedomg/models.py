"""Small analytically-differentiated classifiers over flat parameter vectors.

Three kinds: a bias-free linear binary classifier (the 2-parameter toy
model), multinomial logistic regression, and a one-hidden-layer tanh MLP.
Loss is mean cross-entropy (sigmoid form for the binary model); gradients
are exact, which the finite-difference suites verify.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ParamVector
from .errors import DimensionError, InvalidInputError

MODEL_KINDS = ("linear_binary", "logistic", "mlp1")


@dataclass
class ModelSpec:
    kind: str
    input_dim: int
    num_classes: int
    hidden_dim: int = 0

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise InvalidInputError(f"kind must be one of {MODEL_KINDS}, got {self.kind!r}")
        if self.input_dim < 1 or self.num_classes < 1:
            raise InvalidInputError("input_dim and num_classes must be positive")
        if self.kind == "linear_binary" and (self.input_dim != 2 or self.num_classes != 2):
            raise InvalidInputError("linear_binary is the 2-D, 2-class, 2-parameter toy model")
        if self.kind == "mlp1" and self.hidden_dim < 1:
            raise InvalidInputError("mlp1 requires hidden_dim >= 1")


@dataclass
class Batch:
    """Row-major design matrix plus integer class labels."""

    inputs: np.ndarray  # (n, input_dim)
    labels: np.ndarray  # (n,)

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.inputs.ndim != 2 or self.inputs.shape[0] == 0:
            raise DimensionError(f"inputs must stack to nonempty 2-D, got {self.inputs.shape}")
        if self.labels.shape != (self.inputs.shape[0],):
            raise DimensionError(
                f"{self.inputs.shape[0]} rows but {self.labels.shape} labels"
            )
        if not np.all(np.isfinite(self.inputs)):
            raise InvalidInputError("batch inputs contain NaN or Inf")
        if np.any(self.labels < 0):
            raise InvalidInputError("labels must be nonnegative class indices")

    def __len__(self) -> int:
        return self.inputs.shape[0]


def param_count(spec: ModelSpec) -> int:
    """Flat parameter count; biases included except for the toy model."""
    if spec.kind == "linear_binary":
        return 2
    if spec.kind == "logistic":
        return spec.num_classes * spec.input_dim + spec.num_classes
    return (spec.hidden_dim * spec.input_dim + spec.hidden_dim
            + spec.num_classes * spec.hidden_dim + spec.num_classes)


def init_params(spec: ModelSpec, seed: int) -> ParamVector:
    """Glorot-uniform weights (a = sqrt(6/(fan_in+fan_out))), zero biases."""
    rng = np.random.default_rng(seed)

    def glorot(fan_out, fan_in):
        a = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-a, a, size=(fan_out, fan_in))

    if spec.kind == "linear_binary":
        return glorot(1, spec.input_dim).ravel()
    if spec.kind == "logistic":
        w = glorot(spec.num_classes, spec.input_dim)
        return np.concatenate([w.ravel(), np.zeros(spec.num_classes)])
    w1 = glorot(spec.hidden_dim, spec.input_dim)
    w2 = glorot(spec.num_classes, spec.hidden_dim)
    return np.concatenate([
        w1.ravel(), np.zeros(spec.hidden_dim), w2.ravel(), np.zeros(spec.num_classes),
    ])


def _check_theta(spec: ModelSpec, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64)
    expected = param_count(spec)
    if theta.shape != (expected,):
        raise DimensionError(f"theta has shape {theta.shape}, expected ({expected},)")
    if not np.all(np.isfinite(theta)):
        raise InvalidInputError("theta contains NaN or Inf")
    return theta


def _check_batch(spec: ModelSpec, batch: Batch):
    if batch.inputs.shape[1] != spec.input_dim:
        raise DimensionError(
            f"batch has {batch.inputs.shape[1]} features, model expects {spec.input_dim}"
        )
    if np.any(batch.labels >= spec.num_classes):
        raise InvalidInputError(
            f"labels reach {batch.labels.max()}, model has {spec.num_classes} classes"
        )


def _unpack_mlp(spec: ModelSpec, theta: np.ndarray):
    h, d, c = spec.hidden_dim, spec.input_dim, spec.num_classes
    i = 0
    w1 = theta[i:i + h * d].reshape(h, d); i += h * d
    b1 = theta[i:i + h]; i += h
    w2 = theta[i:i + c * h].reshape(c, h); i += c * h
    b2 = theta[i:i + c]
    return w1, b1, w2, b2


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def loss_and_grad(spec: ModelSpec, theta: ParamVector, batch: Batch) -> tuple[float, ParamVector]:
    """Mean cross-entropy over the batch and its exact flat gradient."""
    theta = _check_theta(spec, theta)
    _check_batch(spec, batch)
    x, y = batch.inputs, batch.labels
    n = x.shape[0]

    if spec.kind == "linear_binary":
        s = x @ theta
        # log(1 + e^s) - y*s, computed without overflow
        loss = float(np.mean(np.logaddexp(0.0, s) - y * s))
        p = 1.0 / (1.0 + np.exp(-s))
        grad = x.T @ (p - y) / n
        return loss, grad

    if spec.kind == "logistic":
        c, d = spec.num_classes, spec.input_dim
        w = theta[:c * d].reshape(c, d)
        b = theta[c * d:]
        p = _softmax(x @ w.T + b)
        loss = float(-np.mean(np.log(p[np.arange(n), y])))
        e = p.copy()
        e[np.arange(n), y] -= 1.0
        e /= n
        return loss, np.concatenate([(e.T @ x).ravel(), e.sum(axis=0)])

    w1, b1, w2, b2 = _unpack_mlp(spec, theta)
    a = np.tanh(x @ w1.T + b1)
    p = _softmax(a @ w2.T + b2)
    loss = float(-np.mean(np.log(p[np.arange(n), y])))
    e = p.copy()
    e[np.arange(n), y] -= 1.0
    e /= n
    dw2 = e.T @ a
    db2 = e.sum(axis=0)
    dpre = (e @ w2) * (1.0 - a * a)
    dw1 = dpre.T @ x
    db1 = dpre.sum(axis=0)
    return loss, np.concatenate([dw1.ravel(), db1, dw2.ravel(), db2])


def sgd_epoch(spec: ModelSpec, theta: ParamVector, data: Batch, lr: float,
              batch_size: int, rng_seed: int) -> ParamVector:
    """One shuffled pass of mini-batch SGD; deterministic given the seed."""
    if not lr > 0:
        raise InvalidInputError(f"lr must be > 0, got {lr}")
    if batch_size < 1:
        raise InvalidInputError(f"batch_size must be >= 1, got {batch_size}")
    theta = _check_theta(spec, theta).copy()
    perm = np.random.default_rng(rng_seed).permutation(len(data))
    for start in range(0, len(data), batch_size):
        idx = perm[start:start + batch_size]
        mini = Batch(data.inputs[idx], data.labels[idx])
        _, grad = loss_and_grad(spec, theta, mini)
        theta -= lr * grad
    return theta


def scores(spec: ModelSpec, theta: ParamVector, data: Batch) -> np.ndarray:
    """Per-class decision scores, shape (n, num_classes)."""
    theta = _check_theta(spec, theta)
    _check_batch(spec, data)
    x = data.inputs
    if spec.kind == "linear_binary":
        s = x @ theta
        return np.stack([np.zeros_like(s), s], axis=1)
    if spec.kind == "logistic":
        c, d = spec.num_classes, spec.input_dim
        w = theta[:c * d].reshape(c, d)
        return x @ w.T + theta[c * d:]
    w1, b1, w2, b2 = _unpack_mlp(spec, theta)
    return np.tanh(x @ w1.T + b1) @ w2.T + b2


def accuracy(spec: ModelSpec, theta: ParamVector, data: Batch) -> float:
    """Fraction of argmax-correct predictions; ties go to the lower class."""
    pred = np.argmax(scores(spec, theta, data), axis=1)
    return float(np.mean(pred == data.labels))
