"""LIME with quartile discretization and a binary interpretable space."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .._random import substream
from ..data import TabularDataset
from ..models import predict_proba

RIDGE_FALLBACK = 1e-6


class QuartileDiscretizer:
    """Per-feature quartile bins learned from training data."""

    def __init__(self, data: TabularDataset):
        X = data.features
        self.cuts = []
        self.sorted_values = []
        self.bin_starts = []
        for j in range(X.shape[1]):
            xs = np.sort(X[:, j])
            cuts = np.unique(np.quantile(xs, [0.25, 0.5, 0.75]))
            # a cut at the maximum would leave an empty top bin
            cuts = cuts[cuts < xs[-1]]
            self.cuts.append(cuts)
            self.sorted_values.append(xs)
            # bin b holds values in (cut[b-1], cut[b]]
            starts = np.concatenate([[0], np.searchsorted(xs, cuts, side="right"), [xs.size]])
            self.bin_starts.append(starts)

    def n_bins(self, j: int) -> int:
        return len(self.cuts[j]) + 1

    def bin_of(self, j: int, values) -> np.ndarray:
        return np.searchsorted(self.cuts[j], np.asarray(values, dtype=float), side="left")

    def sample_from_bins(self, j: int, bins: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        starts = self.bin_starts[j][bins]
        sizes = self.bin_starts[j][bins + 1] - starts
        offsets = np.floor(rng.random(bins.size) * sizes).astype(np.int64)
        return self.sorted_values[j][starts + np.minimum(offsets, np.maximum(sizes - 1, 0))]


@dataclass
class LimeExplanation:
    coefficients: np.ndarray
    intercept: float
    used_ridge_fallback: bool
    local_prediction: float


def lime_explain(
    model,
    instance,
    data: TabularDataset,
    n_samples: int = 2500,
    kernel_width: float | None = None,
    seed: int = 0,
    row_key: int = 0,
    discretizer: QuartileDiscretizer | None = None,
) -> LimeExplanation:
    """Fit a weighted linear surrogate in the binary "same quartile" space.

    The first sample is the instance itself. For every other sample each
    feature independently keeps the instance's value (z'=1) with probability
    1/2, or takes a training value drawn from a uniformly chosen other
    quartile bin (z'=0). Weights are ``exp(-D^2 / width^2)`` where ``D`` is
    the Euclidean distance of z' from the all-ones vector.
    """
    instance = np.asarray(instance, dtype=float)
    d = instance.size
    if kernel_width is None:
        kernel_width = 0.75 * math.sqrt(d)
    disc = discretizer or QuartileDiscretizer(data)
    rng = substream(seed, "lime", row_key)

    Z = np.ones((n_samples, d))
    rows = np.tile(instance, (n_samples, 1))
    for j in range(d):
        nb = disc.n_bins(j)
        if nb < 2:
            continue
        own = int(disc.bin_of(j, instance[j]))
        flip = rng.random(n_samples) < 0.5
        flip[0] = False
        k = int(flip.sum())
        if k == 0:
            continue
        other = rng.integers(0, nb - 1, size=k)
        other = other + (other >= own)
        rows[flip, j] = disc.sample_from_bins(j, other, rng)
        Z[flip, j] = 0.0

    target = predict_proba(model, rows)
    dist2 = np.sum((1.0 - Z) ** 2, axis=1)
    weights = np.exp(-dist2 / kernel_width**2)
    # a feature with one bin never varies in z'; it gets coefficient 0
    varied = np.array([disc.n_bins(j) >= 2 for j in range(d)])
    design = np.hstack([np.ones((n_samples, 1)), Z[:, varied]])
    sw = np.sqrt(weights)
    A = design * sw[:, None]
    b = target * sw
    fallback = np.linalg.matrix_rank(A) < A.shape[1]
    if fallback:
        gram = A.T @ A + RIDGE_FALLBACK * np.eye(A.shape[1])
        beta = np.linalg.solve(gram, A.T @ b)
    else:
        beta = np.linalg.lstsq(A, b, rcond=None)[0]
    coefficients = np.zeros(d)
    coefficients[varied] = beta[1:]
    return LimeExplanation(coefficients, float(beta[0]), bool(fallback), float(beta.sum()))
