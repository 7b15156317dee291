"""Multinomial logistic regression fitted by gradient descent."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import log_softmax

from ..errors import InputError, ParameterError

log = logging.getLogger(__name__)


@dataclass
class LogisticModel:
    """Weights ``coef`` (n_features, n_classes), ``intercept`` and the loss trace."""

    coef: np.ndarray
    intercept: np.ndarray
    l2: float
    loss_history: list = field(default_factory=list)
    converged: bool = False

    @property
    def n_classes(self):
        return self.coef.shape[1]

    def predict_proba(self, X):
        return logreg_predict_proba(self, X)


def _check_X(X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, np.newaxis]
    if X.ndim != 2 or X.shape[0] == 0:
        raise InputError("X must be a non-empty (n_samples, n_features) matrix")
    if not np.all(np.isfinite(X)):
        raise InputError("X contains NaN or infinite values")
    return X


def loss_and_grad(params, X, Y, l2):
    """Mean negative log-likelihood plus ``l2/2 ||W||^2`` and its gradient.

    ``params`` stacks the weights over the intercept: shape
    ``(n_features + 1, n_classes)``. ``Y`` is one-hot. The intercept is not
    penalised.
    """
    W, b = params[:-1], params[-1]
    logp = log_softmax(X @ W + b, axis=1)
    n = X.shape[0]
    loss = -(Y * logp).sum() / n + 0.5 * l2 * (W * W).sum()
    R = (np.exp(logp) - Y) / n
    grad = np.vstack([X.T @ R + l2 * W, R.sum(0)])
    return float(loss), grad


def logreg_fit(X, y, l2=1e-3, max_iter=1000, tol=1e-6, n_classes=None):
    """Fit by gradient descent with Armijo backtracking.

    Stops when the gradient norm drops below ``tol`` or after ``max_iter``
    accepted steps.
    """
    X = _check_X(X)
    y = np.asarray(y).ravel()
    if y.size != X.shape[0]:
        raise InputError(f"{y.size} labels for {X.shape[0]} rows")
    if np.any(y < 0) or np.any(y != np.round(y)):
        raise InputError("labels must be non-negative integers")
    if l2 < 0 or max_iter < 1 or tol <= 0:
        raise ParameterError("need l2 >= 0, max_iter >= 1, tol > 0")
    y = y.astype(np.int64)
    C = int(y.max()) + 1 if n_classes is None else int(n_classes)
    C = max(C, 2)
    Y = np.eye(C)[y]
    params = np.zeros((X.shape[1] + 1, C))
    loss, grad = loss_and_grad(params, X, Y, l2)
    history, step, converged = [loss], 1.0, False
    for _ in range(max_iter):
        g2 = float((grad * grad).sum())
        if np.sqrt(g2) < tol:
            converged = True
            break
        step *= 2.0
        while True:
            cand = params - step * grad
            new_loss, new_grad = loss_and_grad(cand, X, Y, l2)
            if new_loss <= loss - 0.5 * step * g2 or step < 1e-12:
                break
            step *= 0.5
        if new_loss > loss:
            break
        params, loss, grad = cand, new_loss, new_grad
        history.append(loss)
    else:
        log.info("logreg_fit stopped at max_iter=%d, |grad|=%.3g", max_iter, np.sqrt(g2))
    return LogisticModel(params[:-1], params[-1], l2, history, converged)


def logreg_predict_proba(model: LogisticModel, X):
    X = _check_X(X)
    if X.shape[1] != model.coef.shape[0]:
        raise InputError(f"model expects {model.coef.shape[0]} features, got {X.shape[1]}")
    return np.exp(log_softmax(X @ model.coef + model.intercept, axis=1))
