"""Performance-diagram curve and its normalized area (NAUPDC)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DegenerateTargetsError(ValueError):
    pass


@dataclass(frozen=True)
class PerformanceCurve:
    thresholds: np.ndarray
    pod: np.ndarray
    sr: np.ndarray


def _counts(probs, labels, thresholds):
    """Hits and false alarms with ``prob >= threshold`` counted as a positive forecast."""
    order = np.argsort(probs, kind="stable")
    p_sorted = probs[order]
    pos_sorted = labels[order]
    # cumulative positives from the top of the sorted list
    pos_from_top = np.concatenate([[0], np.cumsum(pos_sorted[::-1])])
    n = len(probs)
    n_pred = n - np.searchsorted(p_sorted, thresholds, side="left")
    hits = pos_from_top[n_pred]
    false_alarms = n_pred - hits
    return hits, false_alarms


def performance_curve(probs, labels, n_thresholds: int = 200) -> PerformanceCurve:
    """Probability of detection and success ratio on an even threshold grid.

    Thresholds run from 1 down to 0. The success ratio is 1 at thresholds
    where nothing is forecast positive.
    """
    probs = np.asarray(probs, dtype=float).ravel()
    labels = np.asarray(labels).ravel().astype(np.int64)
    if probs.shape != labels.shape:
        raise ValueError("probs and labels must have equal length")
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise DegenerateTargetsError("degenerate targets: no positive labels")
    thresholds = np.linspace(1.0, 0.0, n_thresholds)
    hits, fa = _counts(probs, labels, thresholds)
    pod = hits / n_pos
    n_pred = hits + fa
    sr = np.where(n_pred > 0, hits / np.maximum(n_pred, 1), 1.0)
    return PerformanceCurve(thresholds, pod, sr)


def aupdc(curve: PerformanceCurve) -> float:
    """Trapezoidal area under success ratio as a function of POD.

    Points with POD = 0 carry no area information and are dropped. Repeated
    POD values keep their best success ratio, and the curve is extended
    flat from its lowest POD back to POD = 0.
    """
    keep = curve.pod > 0
    if not keep.any():
        return 0.0
    pod = curve.pod[keep]
    sr = curve.sr[keep]
    uniq, inverse = np.unique(pod, return_inverse=True)
    best_sr = np.full(uniq.shape, -np.inf)
    np.maximum.at(best_sr, inverse, sr)
    x = np.concatenate([[0.0], uniq])
    y = np.concatenate([[best_sr[0]], best_sr])
    return float(np.trapezoid(y, x))


def naupdc(probs, labels, n_thresholds: int = 200) -> float:
    """AUPDC rescaled so a no-skill forecast scores 0 and a perfect one scores 1."""
    labels = np.asarray(labels).ravel()
    base_rate = float(np.mean(labels))
    if base_rate >= 1.0:
        raise DegenerateTargetsError("normalization undefined: base rate is 1")
    area = aupdc(performance_curve(probs, labels, n_thresholds))
    return (area - base_rate) / (1.0 - base_rate)


class NaupdcScorer:
    """Reusable NAUPDC for a fixed label vector."""

    def __init__(self, labels, n_thresholds: int = 200):
        self.labels = np.asarray(labels).ravel().astype(np.int64)
        self.n_thresholds = n_thresholds
        self.base_rate = float(self.labels.mean())
        if self.labels.sum() == 0:
            raise DegenerateTargetsError("degenerate targets: no positive labels")
        if self.base_rate >= 1.0:
            raise DegenerateTargetsError("normalization undefined: base rate is 1")

    def __call__(self, probs) -> float:
        return naupdc(probs, self.labels, self.n_thresholds)
