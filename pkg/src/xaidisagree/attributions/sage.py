"""SAGE: Shapley attribution of expected log-loss with marginal imputation."""

from __future__ import annotations

import logging

import numpy as np

from .._random import substream
from ..data import TabularDataset
from ..models import predict_proba
from ..results import ImportanceResult

logger = logging.getLogger(__name__)

_EPS = 1e-12


def log_loss(labels: np.ndarray, probs: np.ndarray) -> np.ndarray:
    """Per-example binary cross-entropy."""
    p = np.clip(probs, _EPS, 1.0 - _EPS)
    return -(labels * np.log(p) + (1 - labels) * np.log(1.0 - p))


LOSSES = {"log_loss": log_loss}


def imputed_predictions(model, rows: np.ndarray, known: np.ndarray, background: np.ndarray) -> np.ndarray:
    """Mean prediction over ``background`` with unknown features imputed from it."""
    n, d = rows.shape
    m = background.shape[0]
    filled = np.where(known[:, None, :], rows[:, None, :], background[None, :, :])
    return predict_proba(model, filled.reshape(-1, d)).reshape(n, m).mean(axis=1)


def _batch_rows(seed: int, b: int, batch: int, n: int) -> np.ndarray:
    """Rows for batch ``b``: consecutive slices of per-epoch shuffles of all rows."""
    start = b * batch
    stop = start + batch
    parts = []
    for epoch in range(start // n, (stop - 1) // n + 1):
        order = substream(seed, "sage-rows", epoch).permutation(n)
        lo = max(start - epoch * n, 0)
        hi = min(stop - epoch * n, n)
        parts.append(order[lo:hi])
    return np.concatenate(parts)


def sage_values(
    model,
    data: TabularDataset,
    loss: str = "log_loss",
    n_outer_samples: int = 2048,
    batch: int = 64,
    seed: int = 0,
    n_background: int = 64,
    convergence_ratio: float = 0.025,
) -> ImportanceResult:
    """Permutation-sampling SAGE estimator.

    Each outer sample takes a data row and draws a feature order, then reveals
    features one at a time; a feature's credit is the drop in loss when it is
    revealed. Hidden features are filled from a fixed background batch drawn
    once from ``data``. Sampling stops when every estimate's standard error
    is below ``convergence_ratio`` times the largest estimate magnitude, or
    after ``n_outer_samples`` rows.

    Rows are visited in shuffled passes over the data without replacement,
    so the summed estimates telescope to the full-data loss gap after each
    complete pass. ``per_round_scores`` holds one row per batch (all batches have equal size).
    """
    if loss not in LOSSES:
        raise ValueError(f"unsupported loss {loss!r}")
    if batch < 1 or n_outer_samples < 1:
        raise ValueError("batch and n_outer_samples must be >= 1")
    loss_fn = LOSSES[loss]
    X = data.features
    y = data.targets.astype(float)
    n, d = X.shape
    bg_rows = substream(seed, "sage-background").choice(n, size=min(n_background, n), replace=False)
    background = X[np.sort(bg_rows)]

    n_batches = max(1, -(-n_outer_samples // batch))
    total = np.zeros(d)
    total_sq = np.zeros(d)
    count = 0
    batch_means = []
    converged = False
    for b in range(n_batches):
        rng = substream(seed, "sage", b)
        idx = _batch_rows(seed, b, batch, n)
        orders = np.argsort(rng.random((batch, d)), axis=1)
        rows, labels = X[idx], y[idx]
        known = np.zeros((batch, d), dtype=bool)
        prev = loss_fn(labels, imputed_predictions(model, rows, known, background))
        contrib = np.zeros((batch, d))
        for step in range(d):
            feat = orders[:, step]
            known[np.arange(batch), feat] = True
            cur = loss_fn(labels, imputed_predictions(model, rows, known, background))
            contrib[np.arange(batch), feat] = prev - cur
            prev = cur
        batch_means.append(contrib.mean(axis=0))
        total += contrib.sum(axis=0)
        total_sq += (contrib**2).sum(axis=0)
        count += batch
        mean = total / count
        if count > 1:
            var = np.maximum(total_sq / count - mean**2, 0.0) * count / (count - 1)
            stderr = np.sqrt(var / count)
            scale = np.max(np.abs(mean))
            if scale > 0 and np.all(stderr < convergence_ratio * scale):
                converged = True
                break
    if not converged:
        logger.info("SAGE did not converge within %d samples", count)
    return ImportanceResult.from_rounds(
        "sage",
        data.feature_names,
        np.array(batch_means),
        direction="backward",
        mode="single",
        extras={"converged": converged, "n_samples": count, "loss": loss},
    )
