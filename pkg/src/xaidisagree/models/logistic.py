"""Elastic-net logistic regression fit by proximal gradient descent."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from ..data import StandardizationParams, TabularDataset, standardize

logger = logging.getLogger(__name__)


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class LogisticRegressionModel:
    """P(y=1|x) = sigmoid(bias + coefficients . standardized(x))."""

    bias: float
    coefficients: np.ndarray
    standardization: StandardizationParams
    loss_history: tuple[float, ...] = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        coef = np.asarray(self.coefficients, dtype=float)
        if not (np.all(np.isfinite(coef)) and np.isfinite(self.bias)):
            raise ValueError("model parameters must be finite")
        if len(coef) != len(self.standardization.means):
            raise ValueError("coefficient length must equal n_features")
        object.__setattr__(self, "coefficients", coef)

    @property
    def n_features(self) -> int:
        return len(self.coefficients)

    def decision_function(self, rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != self.n_features:
            raise ValueError(f"expected rows of width {self.n_features}, got shape {rows.shape}")
        return self.bias + self.standardization.transform(rows) @ self.coefficients

    def predict_proba(self, rows: np.ndarray) -> np.ndarray:
        return expit(self.decision_function(rows))

    @classmethod
    def from_coefficients(cls, coefficients, bias: float = 0.0, means=None, stds=None) -> "LogisticRegressionModel":
        """Build a model directly; default transform is the identity."""
        coefficients = np.asarray(coefficients, dtype=float)
        d = len(coefficients)
        means = np.zeros(d) if means is None else np.asarray(means, dtype=float)
        stds = np.ones(d) if stds is None else np.asarray(stds, dtype=float)
        return cls(float(bias), coefficients, StandardizationParams(means, stds))


def _objective(Z, y, w, b, l1, l2):
    s = b + Z @ w
    # mean log-loss in a numerically stable form
    loss = np.mean(np.logaddexp(0.0, s) - y * s)
    return loss + l1 * np.abs(w).sum() + 0.5 * l2 * (w @ w)


def train_logistic(
    data: TabularDataset,
    l1_penalty: float = 0.0,
    l2_penalty: float = 0.0,
    max_iters: int = 5000,
    tol: float = 1e-8,
) -> LogisticRegressionModel:
    """Fit with ISTA using a fixed step from the Lipschitz bound.

    The loss is ``mean log-loss + l1*|w|_1 + (l2/2)*|w|_2^2`` on standardized
    inputs; the intercept is not penalized.
    """
    if l1_penalty < 0 or l2_penalty < 0:
        raise ValueError("penalties must be non-negative")
    if data.n_examples >= 2:
        std_data, params = standardize(data)
        Z = std_data.features
    else:
        params = StandardizationParams(np.zeros(data.n_features), np.zeros(data.n_features))
        Z = np.zeros_like(data.features)
    y = data.targets.astype(float)
    n, d = Z.shape

    design = np.hstack([np.ones((n, 1)), Z])
    top_eig = np.linalg.eigvalsh(design.T @ design / n)[-1]
    step = 1.0 / (0.25 * top_eig + l2_penalty)

    w = np.zeros(d)
    b = 0.0
    history = [_objective(Z, y, w, b, l1_penalty, l2_penalty)]
    for it in range(max_iters):
        resid = expit(b + Z @ w) - y
        grad_w = Z.T @ resid / n + l2_penalty * w
        grad_b = resid.mean()
        w_new = w - step * grad_w
        w_new = np.sign(w_new) * np.maximum(np.abs(w_new) - step * l1_penalty, 0.0)
        b_new = b - step * grad_b
        obj = _objective(Z, y, w_new, b_new, l1_penalty, l2_penalty)
        if not np.isfinite(obj):
            raise ConvergenceError("diverged")
        change = max(np.max(np.abs(w_new - w), initial=0.0), abs(b_new - b))
        w, b = w_new, b_new
        history.append(obj)
        if change < tol:
            break
    else:
        logger.info("logistic training hit max_iters=%d", max_iters)
    return LogisticRegressionModel(float(b), w, params, tuple(history))
