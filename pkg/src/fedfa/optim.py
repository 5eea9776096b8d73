"""Client-side training: mini-batch gradient descent with heavy-ball momentum.

Each step computes the batch gradient ``g`` and applies::

    m <- gamma_c * m + eta * g
    w <- w - m

The learning rate sits inside the momentum buffer. With ``gamma_c = 0`` this
is exactly plain mini-batch SGD.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import check_int, check_real
from .exceptions import InvalidParameterError, NonFiniteError
from .model import ModelParams, _cross_entropy_grad


@dataclass(frozen=True)
class LocalTrainConfig:
    epochs: int = 20
    batch_size: int = 10
    lr: float = 0.01
    gamma_c: float = 0.0
    prox_mu: float = 0.0
    shuffle_seed: int = 0

    def __post_init__(self):
        check_int(self.epochs, "epochs", min_value=1)
        check_int(self.batch_size, "batch_size", min_value=1)
        check_real(self.lr, "lr", low=0.0, low_inclusive=False)
        check_real(self.gamma_c, "gamma_c", low=0.0, high=1.0, high_inclusive=False)
        check_real(self.prox_mu, "prox_mu", low=0.0)
        check_int(self.shuffle_seed, "shuffle_seed", min_value=0)


def local_train(start, X, y, cfg, on_step=None):
    """Run ``cfg.epochs`` epochs of momentum SGD starting from ``start``.

    The momentum buffer starts at zero on every call. When ``cfg.prox_mu > 0``
    the proximal term is anchored at ``start``.

    Parameters
    ----------
    start : ModelParams
        Initial (global) parameters; not modified.
    X, y : ndarray
        The client's training split.
    cfg : LocalTrainConfig
    on_step : callable, optional
        Called as ``on_step(step, grad_flat, momentum_flat)`` after every update,
        with copies of the flat gradient and momentum buffer.

    Returns
    -------
    params : ModelParams
    last_epoch_loss : float
        Example-weighted mean of the batch losses seen during the final epoch.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.intp)
    n = X.shape[0]
    if n == 0:
        raise InvalidParameterError("cannot train on an empty shard")
    C, d = start.n_classes, start.n_features
    if X.ndim != 2 or X.shape[1] != d or y.shape != (n,):
        raise InvalidParameterError(f"shard shapes {X.shape}, {y.shape} do not match d={d}")

    split = C * d
    theta = start.flat()
    W, b = theta[:split].reshape(C, d), theta[split:]
    grad = np.zeros_like(theta)
    grad_W, grad_b = grad[:split].reshape(C, d), grad[split:]
    momentum = np.zeros_like(theta)
    anchor = start.flat() if cfg.prox_mu > 0 else None

    rng = np.random.default_rng(cfg.shuffle_seed)
    bs = cfg.batch_size
    step = 0
    epoch_loss = 0.0
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        Xs, ys = X[order], y[order]
        epoch_loss = 0.0
        for lo in range(0, n, bs):
            xb, yb = Xs[lo:lo + bs], ys[lo:lo + bs]
            loss = _cross_entropy_grad(W, b, xb, yb, grad_W, grad_b)
            if anchor is not None:
                diff = theta - anchor
                loss += 0.5 * cfg.prox_mu * float(diff @ diff)
                grad += cfg.prox_mu * diff
            if not np.isfinite(loss):
                raise NonFiniteError(
                    f"non-finite loss {loss} at epoch {epoch}, step {step} (lr={cfg.lr})"
                )
            momentum *= cfg.gamma_c
            momentum += cfg.lr * grad
            theta -= momentum
            epoch_loss += loss * len(yb)
            step += 1
            if on_step is not None:
                on_step(step, grad.copy(), momentum.copy())
        epoch_loss /= n

    if not np.all(np.isfinite(theta)):
        raise NonFiniteError(f"non-finite parameters after {step} steps (lr={cfg.lr})")
    return ModelParams.from_flat(theta, C, d), float(epoch_loss)
