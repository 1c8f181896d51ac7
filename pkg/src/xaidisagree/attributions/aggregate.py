"""Turning per-row attributions into global rankings and binned effect curves."""

from __future__ import annotations

import numpy as np

from .._random import substream
from ..data import BinGrid, TabularDataset
from ..results import AttributionSet, EffectCurve, ImportanceResult


def sample_rows(n_examples: int, sample_cap: int = 50_000, seed: int = 0) -> np.ndarray:
    """Sorted row indices: all rows, or ``sample_cap`` drawn without replacement."""
    if n_examples <= sample_cap:
        return np.arange(n_examples)
    return np.sort(substream(seed, "explain-rows").choice(n_examples, size=sample_cap, replace=False))


def background_rows(n_examples: int, size: int = 100, seed: int = 0) -> np.ndarray:
    if n_examples <= size:
        return np.arange(n_examples)
    return np.sort(substream(seed, "background").choice(n_examples, size=size, replace=False))


def global_relevance(attr: AttributionSet, feature_names=None) -> ImportanceResult:
    """Sum of absolute attributions per feature over the explained rows."""
    names = feature_names or attr.feature_names or tuple(f"x{i}" for i in range(attr.phi.shape[1]))
    scores = np.abs(attr.phi).sum(axis=0)
    return ImportanceResult.from_rounds(attr.method_id, tuple(names), scores[None, :], mode="relevance")


def binned_effect(attr: AttributionSet, data: TabularDataset, feature_index: int, grid: BinGrid) -> EffectCurve:
    """Mean attribution per bin of the feature, centered by the row-weighted mean.

    Bins without explained rows are dropped from the curve.
    """
    x = data.features[attr.explained_row_indices, feature_index]
    phi = attr.phi[:, feature_index]
    bins = grid.assign(x)
    counts = np.bincount(bins, minlength=grid.n_bins)
    sums = np.bincount(bins, weights=phi, minlength=grid.n_bins)
    present = counts > 0
    means = sums[present] / counts[present]
    centered = means - np.sum(counts[present] * means) / counts[present].sum()
    return EffectCurve(
        feature_index,
        grid.centers[present],
        centered,
        attr.method_id,
        counts[present],
        data.feature_names[feature_index],
    )


def aggregate_attributions(
    attr: AttributionSet,
    data: TabularDataset,
    mode: str = "global_relevance",
    feature_index: int | None = None,
    grid: BinGrid | None = None,
):
    if mode == "global_relevance":
        return global_relevance(attr, data.feature_names)
    if mode == "binned_effect":
        if feature_index is None or grid is None:
            raise ValueError("binned_effect needs feature_index and grid")
        return binned_effect(attr, data, feature_index, grid)
    raise ValueError(f"unknown aggregation mode {mode!r}")
