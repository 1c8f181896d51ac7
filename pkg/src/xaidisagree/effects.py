"""Feature effects: partial dependence, ALE, ALE-variance ranking, event rates."""

from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy import stats

from ._random import parallel_map
from .data import BinGrid, DataError, TabularDataset, quantile_bins
from .models import predict_proba
from .results import EffectCurve, EventRateCurve, ImportanceResult


def _check_grid(grid: BinGrid):
    if grid.n_bins < 1 or len(grid.edges) < 2:
        raise DataError("degenerate grid")


def partial_dependence(model, data: TabularDataset, feature_index: int, grid: BinGrid, n_jobs: int = 1) -> EffectCurve:
    """Mean prediction with the feature clamped at each bin center, centered
    by the unweighted mean over grid points."""
    _check_grid(grid)
    X = data.features

    def at(v):
        Xv = X.copy()
        Xv[:, feature_index] = v
        return float(predict_proba(model, Xv).mean())

    pd_values = np.array(parallel_map(at, grid.centers, n_jobs))
    return EffectCurve(
        feature_index,
        grid.centers.copy(),
        pd_values - pd_values.mean(),
        "pd",
        grid.counts.copy(),
        data.feature_names[feature_index],
    )


def _merge_empty_bins(edges: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Drop interior edges so that every bin holds at least one row.

    An empty bin is folded into its left neighbour; a leading empty bin is
    folded into the first non-empty one.
    """
    keep = [0]
    for k in range(len(counts)):
        if counts[k] > 0:
            keep.append(k + 1)
        else:
            # extend the previous bin over this empty one
            if len(keep) > 1:
                keep[-1] = k + 1
    if keep[-1] != len(edges) - 1:
        keep[-1] = len(edges) - 1
    return edges[np.array(keep)]


def ale_first_order(model, data: TabularDataset, feature_index: int, grid: BinGrid) -> EffectCurve:
    """First-order accumulated local effects.

    Local effect per bin is the mean, over rows in the bin, of the prediction
    difference between the bin's upper and lower edge. Effects are summed up
    to each edge; each bin is reported at its center as the average of its
    two edge values, then centered by the bin-count-weighted mean.
    """
    _check_grid(grid)
    x = data.features[:, feature_index]
    counts = np.bincount(grid.assign(x), minlength=grid.n_bins)
    edges = grid.edges
    if np.any(counts == 0):
        edges = _merge_empty_bins(edges, counts)
    n_bins = len(edges) - 1
    if n_bins < 2:
        raise DataError("ALE needs at least 2 usable bins")
    merged = BinGrid(edges, 0.5 * (edges[:-1] + edges[1:]), np.zeros(n_bins, dtype=np.int64))
    bins = merged.assign(x)
    counts = np.bincount(bins, minlength=n_bins)

    lower = data.features.copy()
    upper = data.features.copy()
    lower[:, feature_index] = edges[bins]
    upper[:, feature_index] = edges[bins + 1]
    diffs = predict_proba(model, upper) - predict_proba(model, lower)
    local = np.bincount(bins, weights=diffs, minlength=n_bins) / counts

    at_edges = np.concatenate([[0.0], np.cumsum(local)])
    at_centers = 0.5 * (at_edges[:-1] + at_edges[1:])
    centered = at_centers - np.sum(counts * at_centers) / counts.sum()
    return EffectCurve(feature_index, merged.centers, centered, "ale", counts, data.feature_names[feature_index])


def weighted_std(values: np.ndarray, weights: np.ndarray) -> float:
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    mean = np.sum(weights * values) / weights.sum()
    return float(np.sqrt(np.sum(weights * (values - mean) ** 2) / weights.sum()))


def ale_variance_ranking(curves: Sequence[EffectCurve], feature_names=None) -> ImportanceResult:
    """Rank features by the bin-count-weighted standard deviation of their ALE."""
    if not curves:
        raise ValueError("no curves given")
    curves = sorted(curves, key=lambda c: c.feature_index)
    scores = np.array([weighted_std(c.values, c.bin_counts) for c in curves])
    names = feature_names or [c.feature_name or f"x{c.feature_index}" for c in curves]
    return ImportanceResult.from_rounds("ale_var", tuple(names), scores[None, :], mode="relevance")


def _beta_interval(pos, neg, alpha, beta, level):
    tail = 0.5 * (1.0 - level)
    a, b = alpha + pos, beta + neg
    return stats.beta.ppf(tail, a, b), stats.beta.ppf(1.0 - tail, a, b)


def event_rate_histogram(
    data: TabularDataset,
    feature_index: int,
    initial_bins: int = 30,
    prior_alpha: float = 1.0,
    prior_beta: float = 1.0,
    merge_confidence: float = 0.95,
) -> EventRateCurve:
    """Beta-posterior event rate per bin, with adjacent bins merged while
    their credible intervals overlap.

    Each pass computes every bin's interval, then merges each maximal run of
    bins whose neighbouring intervals overlap. Passes repeat until no adjacent
    intervals overlap. All merges in a pass are decided together, so the
    result does not depend on sweep direction.
    """
    if data.targets.sum() < 1:
        raise DataError("event rate needs at least one positive example")
    x = data.features[:, feature_index]
    grid = quantile_bins(x, initial_bins)
    bins = grid.assign(x)
    pos = np.bincount(bins, weights=data.targets, minlength=grid.n_bins).astype(np.int64)
    tot = np.bincount(bins, minlength=grid.n_bins).astype(np.int64)
    edges = grid.edges
    neg = tot - pos

    while len(pos) > 1:
        lo, hi = _beta_interval(pos, neg, prior_alpha, prior_beta, merge_confidence)
        overlaps = (lo[:-1] <= hi[1:]) & (lo[1:] <= hi[:-1])
        if not overlaps.any():
            break
        run = np.concatenate([[0], np.cumsum(~overlaps)])
        pos = np.bincount(run, weights=pos).astype(np.int64)
        neg = np.bincount(run, weights=neg).astype(np.int64)
        edges = np.concatenate([edges[:1], edges[1:][np.append(~overlaps, True)]])

    a = prior_alpha + pos
    b = prior_beta + neg
    lo, hi = _beta_interval(pos, neg, prior_alpha, prior_beta, merge_confidence)
    return EventRateCurve(
        feature_index,
        edges.copy(),
        a / (a + b),
        np.asarray(lo, dtype=float),
        np.asarray(hi, dtype=float),
        prior_alpha,
        prior_beta,
        pos,
        neg,
        data.feature_names[feature_index],
    )


def method_average_effect(curves: Sequence[EffectCurve], common_grid: BinGrid) -> tuple[EffectCurve, np.ndarray]:
    """Mean and per-point population standard deviation of several methods'
    curves after linear interpolation onto ``common_grid`` centers."""
    if len(curves) < 2:
        raise ValueError("method average needs at least 2 curves")
    features = {c.feature_index for c in curves}
    if len(features) != 1:
        raise ValueError(f"mismatched feature indices: {sorted(features)}")
    stacked = np.vstack([c.interpolate(common_grid.centers) for c in curves])
    mean = stacked.mean(axis=0)
    spread = stacked.std(axis=0)
    first = curves[0]
    curve = EffectCurve(
        first.feature_index, common_grid.centers.copy(), mean, "method_average", common_grid.counts.copy(), first.feature_name
    )
    return curve, spread
