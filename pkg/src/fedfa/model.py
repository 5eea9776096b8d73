"""Multinomial logistic regression: probabilities, loss, gradients, accuracy.

Parameters travel between server and clients as :class:`ModelParams`; the
canonical flat layout is ``W`` in row-major order followed by ``b``.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionMismatchError, InvalidParameterError


@dataclass
class ModelParams:
    """Weight matrix ``W`` of shape (C, d) and bias ``b`` of shape (C,)."""

    W: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[0],):
            raise DimensionMismatchError(
                f"W must be (C, d) and b (C,), got {self.W.shape} and {self.b.shape}"
            )

    @property
    def n_classes(self):
        return self.W.shape[0]

    @property
    def n_features(self):
        return self.W.shape[1]

    @property
    def size(self):
        return self.W.size + self.b.size

    @classmethod
    def zeros(cls, n_classes, n_features):
        return cls(np.zeros((n_classes, n_features)), np.zeros(n_classes))

    @classmethod
    def from_flat(cls, vec, n_classes, n_features):
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != (n_classes * n_features + n_classes,):
            raise DimensionMismatchError(
                f"flat vector of length {vec.size} does not match C={n_classes}, d={n_features}"
            )
        split = n_classes * n_features
        return cls(vec[:split].reshape(n_classes, n_features).copy(), vec[split:].copy())

    def flat(self):
        return np.concatenate([self.W.ravel(), self.b])

    def copy(self):
        return ModelParams(self.W.copy(), self.b.copy())

    def is_finite(self):
        return bool(np.all(np.isfinite(self.W)) and np.all(np.isfinite(self.b)))

    def same_shape(self, other):
        return self.W.shape == other.W.shape


@dataclass
class GradEval:
    loss: float
    grad: ModelParams


def _check_features(params, X):
    X = np.asarray(X, dtype=np.float64)
    if X.shape[-1] != params.n_features:
        raise DimensionMismatchError(
            f"expected {params.n_features} features, got {X.shape[-1]}"
        )
    return X


def _softmax_rows(logits):
    shifted = logits - logits.max(axis=-1, keepdims=True)
    np.exp(shifted, out=shifted)
    shifted /= shifted.sum(axis=-1, keepdims=True)
    return shifted


def predict_proba(params, x):
    """Class probabilities for one example (1-D ``x``) or a batch (2-D ``x``).

    Logits are shifted by their maximum before exponentiation, so extreme
    values such as ``(1000, 0)`` do not overflow.
    """
    x = _check_features(params, x)
    return _softmax_rows(x @ params.W.T + params.b)


def predict(params, X):
    """Argmax class; ties go to the lowest class index."""
    X = _check_features(params, np.atleast_2d(X))
    return np.argmax(X @ params.W.T + params.b, axis=1)


def _cross_entropy_grad(W, b, X, y, grad_W, grad_b):
    """Mean cross-entropy of (X, y) under (W, b), writing gradients in place.

    This is the hot loop of local training, so it works on raw arrays.
    """
    n = X.shape[0]
    logits = X @ W.T
    logits += b
    logits -= logits.max(axis=1, keepdims=True)
    rows = np.arange(n)
    log_norm = np.log(np.exp(logits).sum(axis=1))
    loss = float(np.mean(log_norm - logits[rows, y]))
    probs = np.exp(logits - log_norm[:, None])
    probs[rows, y] -= 1.0
    probs /= n
    np.matmul(probs.T, X, out=grad_W)
    probs.sum(axis=0, out=grad_b)
    return loss


def loss_and_grad(params, X, y, prox_mu=0.0, anchor=None):
    """Mean cross-entropy plus optional proximal term, with its analytic gradient.

    The objective is ``mean_i CE(x_i, y_i) + prox_mu / 2 * ||params - anchor||^2``.
    """
    X = _check_features(params, np.atleast_2d(X))
    y = np.asarray(y, dtype=np.intp).reshape(-1)
    if X.shape[0] == 0:
        raise InvalidParameterError("batch must be non-empty")
    if y.shape[0] != X.shape[0]:
        raise DimensionMismatchError(f"{X.shape[0]} feature rows but {y.shape[0]} labels")
    if np.any(y < 0) or np.any(y >= params.n_classes):
        raise DimensionMismatchError(f"labels must lie in [0, {params.n_classes})")
    if prox_mu < 0:
        raise InvalidParameterError(f"prox_mu must be >= 0, got {prox_mu}")

    grad_W = np.empty_like(params.W)
    grad_b = np.empty_like(params.b)
    loss = _cross_entropy_grad(params.W, params.b, X, y, grad_W, grad_b)

    if prox_mu > 0:
        if anchor is None:
            raise InvalidParameterError("prox_mu > 0 requires an anchor")
        if not params.same_shape(anchor):
            raise DimensionMismatchError("anchor shape does not match params")
        dW = params.W - anchor.W
        db = params.b - anchor.b
        loss += 0.5 * prox_mu * (float(np.sum(dW * dW)) + float(np.sum(db * db)))
        grad_W += prox_mu * dW
        grad_b += prox_mu * db

    return GradEval(loss, ModelParams(grad_W, grad_b))


def mean_loss(params, X, y):
    """Mean cross-entropy without gradient bookkeeping."""
    X = _check_features(params, np.atleast_2d(X))
    y = np.asarray(y, dtype=np.intp)
    logits = X @ params.W.T + params.b
    logits -= logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(logits).sum(axis=1))
    return float(np.mean(log_norm - logits[np.arange(len(y)), y]))


def accuracy(params, X, y):
    y = np.asarray(y)
    if y.size == 0:
        raise InvalidParameterError("accuracy needs at least one example")
    return float(np.mean(predict(params, X) == y))
