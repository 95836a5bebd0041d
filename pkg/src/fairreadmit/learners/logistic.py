"""Weighted L2-regularised logistic regression trained by gradient descent."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ._common import LearnerError, check_training_set, log_sigmoid, sigmoid


@dataclass(frozen=True)
class LogisticHyper:
    l2: float = 1e-4
    learning_rate: float = 0.1
    max_iters: int = 500
    tol: float = 1e-6

    def __post_init__(self):
        if self.l2 < 0 or self.learning_rate <= 0 or self.max_iters < 0 or self.tol <= 0:
            raise LearnerError(f"invalid logistic hyperparameters: {self}")


@dataclass(frozen=True)
class LinearModel:
    """Coefficients live in standardised feature space; ``mean``/``scale`` map raw X there."""

    coefficients: np.ndarray
    intercept: float
    mean: np.ndarray
    scale: np.ndarray
    training_meta: dict = field(default_factory=dict)

    @property
    def n_features(self):
        return len(self.coefficients)

    def decision_function(self, X):
        if X.shape[1] != self.n_features:
            raise LearnerError(f"model expects {self.n_features} features, got {X.shape[1]}")
        beta_raw = self.coefficients / self.scale
        return np.asarray(X @ beta_raw).ravel() + (self.intercept - float(self.mean @ beta_raw))

    def to_dict(self):
        return {
            "kind": "linear",
            "coefficients": self.coefficients.tolist(),
            "intercept": self.intercept,
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
            "training_meta": dict(self.training_meta),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            coefficients=np.asarray(d["coefficients"], dtype=np.float64),
            intercept=float(d["intercept"]),
            mean=np.asarray(d["mean"], dtype=np.float64),
            scale=np.asarray(d["scale"], dtype=np.float64),
            training_meta=dict(d.get("training_meta", {})),
        )


def standardization(X):
    """Column mean and standard deviation; constant columns get scale 1."""
    n = X.shape[0]
    if sp.issparse(X):
        mean = np.asarray(X.mean(axis=0)).ravel()
        sq = np.asarray(X.multiply(X).mean(axis=0)).ravel()
        var = np.maximum(sq - mean**2, 0.0)
    else:
        X = np.asarray(X, dtype=np.float64)
        mean = X.mean(axis=0) if n else np.zeros(X.shape[1])
        var = X.var(axis=0) if n else np.zeros(X.shape[1])
    scale = np.sqrt(var)
    scale[scale <= 1e-12] = 1.0
    return mean, scale


def logistic_loss_and_grad(beta, intercept, X, y, w, l2, mean=None, scale=None):
    """Weighted negative log-likelihood plus ``l2/2 * |beta|^2`` and its gradient.

    The linear predictor is ``((X - mean) / scale) @ beta + intercept``; the
    centring is applied implicitly so sparse X stays sparse. Returns
    ``(loss, grad_beta, grad_intercept)``.
    """
    d = X.shape[1]
    mean = np.zeros(d) if mean is None else mean
    scale = np.ones(d) if scale is None else scale
    beta_raw = beta / scale
    z = np.asarray(X @ beta_raw).ravel() + (intercept - float(mean @ beta_raw))
    y = np.asarray(y, dtype=np.float64)
    # -[y log s(z) + (1-y) log(1-s(z))] = -y log s(z) - (1-y) log s(-z)
    nll = -(y * log_sigmoid(z) + (1.0 - y) * log_sigmoid(-z))
    loss = float(w @ nll) + 0.5 * l2 * float(beta @ beta)
    r = w * (sigmoid(z) - y)
    xtr = np.asarray(X.T @ r).ravel()
    grad_beta = (xtr - mean * r.sum()) / scale + l2 * beta
    return loss, grad_beta, float(r.sum())


def train_logistic(train, hyper: LogisticHyper | None = None) -> LinearModel:
    """Fit by fixed-step gradient descent on standardised features.

    The step is taken on the loss divided by the total weight, which has the
    same minimiser but keeps ``learning_rate`` meaningful at any sample size.
    Stops after ``max_iters`` steps or when the gradient's max-norm (same
    normalisation) drops below ``tol``.
    """
    hyper = hyper or LogisticHyper()
    X, y, w = train.X, train.y, train.w
    check_training_set(X, y, w)
    mean, scale = standardization(X)
    total_w = float(w.sum())
    beta = np.zeros(X.shape[1])
    b = 0.0
    loss = float("nan")
    it = 0
    for it in range(hyper.max_iters + 1):
        loss, g_beta, g_b = logistic_loss_and_grad(beta, b, X, y, w, hyper.l2, mean, scale)
        if not np.isfinite(loss):
            raise LearnerError(f"logistic regression diverged at iteration {it}")
        g_beta /= total_w
        g_b /= total_w
        gnorm = max(float(np.max(np.abs(g_beta), initial=0.0)), abs(g_b))
        if gnorm < hyper.tol or it == hyper.max_iters:
            break
        beta = beta - hyper.learning_rate * g_beta
        b = b - hyper.learning_rate * g_b
    return LinearModel(
        coefficients=beta,
        intercept=b,
        mean=mean,
        scale=scale,
        training_meta={"iterations": it, "final_loss": loss, "grad_max_norm": gnorm},
    )
