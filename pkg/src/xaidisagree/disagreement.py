"""Agreement statistics between feature rankings and between effect curves."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

from .data import BinGrid
from .results import EffectCurve, ImportanceResult

IMPORTANCE_METHODS = frozenset({"bsp", "fsp", "bmp", "fmp", "sage", "gini", "grouped", "grouped_only"})
RELEVANCE_METHODS = frozenset({"coef", "ale_var", "shap", "owen", "lime", "ti"})


def default_category(method_id: str) -> str:
    return "importance" if method_id in IMPORTANCE_METHODS else "relevance"


@dataclass(frozen=True)
class AgreementMatrix:
    method_ids: tuple[str, ...]
    values: np.ndarray
    statistic_id: str
    summary: dict = field(default_factory=dict)
    clamped: bool = False

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic_id,
            "method_ids": list(self.method_ids),
            "values": [[float(v) for v in row] for row in self.values],
            "summary": {k: (None if v is None else float(v)) for k, v in self.summary.items()},
            "clamped": bool(self.clamped),
        }

    def csv_rows(self) -> list[list]:
        return [
            [a, b, float(self.values[i, j])]
            for i, a in enumerate(self.method_ids)
            for j, b in enumerate(self.method_ids)
        ]


def _check_universe(a: ImportanceResult, b: ImportanceResult):
    if set(a.unit_names) != set(b.unit_names):
        raise ValueError("rankings cover different feature sets")


def top_k_feature_agreement(a: ImportanceResult, b: ImportanceResult, k: int = 10) -> float:
    """Fraction of shared features between the two top-k lists."""
    _check_universe(a, b)
    k = min(k, len(a.unit_names))
    return len(set(a.top(k)) & set(b.top(k))) / k


def _rank_agreement_one_way(a: ImportanceResult, b: ImportanceResult, k: int, tolerance: int) -> float:
    pos_b = b.position_of()
    top_b = set(b.top(k))
    hits = 0
    for pos_a, name in enumerate(a.top(k)):
        if name in top_b and abs(pos_a - pos_b[name]) <= tolerance:
            hits += 1
    return hits / k


def rank_agreement(a: ImportanceResult, b: ImportanceResult, k: int = 10, tolerance: int = 1) -> float:
    """Fraction of top-k features whose positions differ by at most ``tolerance``.

    A feature counts only if it is in both top-k lists. The two directions
    (a's top-k against b, and b's against a) are averaged.
    """
    _check_universe(a, b)
    k = min(k, len(a.unit_names))
    return 0.5 * (_rank_agreement_one_way(a, b, k, tolerance) + _rank_agreement_one_way(b, a, k, tolerance))


def weighted_rmsd_agreement(rmsds: Sequence[float], weights: Sequence[float]) -> float:
    """``1 - sum(w * rmsd) / sum(w)``; equal weights when all weights vanish."""
    rmsds = np.asarray(rmsds, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if weights.sum() <= 0:
        weights = np.ones_like(rmsds)
    return float(1.0 - np.sum(weights * rmsds) / weights.sum())


def effect_agreement(
    curves_a: Sequence[EffectCurve],
    curves_b: Sequence[EffectCurve],
    common_grid_per_feature: Mapping[int, BinGrid] | Sequence[BinGrid],
) -> float:
    """Variance-weighted ``1 - RMSD`` between two methods' curve sets.

    Curves are interpolated onto each feature's common grid centers. The
    weight for a feature is the mean of the two interpolated curves' variances.
    """
    by_a = {c.feature_index: c for c in curves_a}
    by_b = {c.feature_index: c for c in curves_b}
    features = sorted(set(by_a) & set(by_b))
    if not features:
        raise ValueError("curve sets share no features")
    if not isinstance(common_grid_per_feature, Mapping):
        common_grid_per_feature = dict(enumerate(common_grid_per_feature))
    rmsds, weights = [], []
    for f in features:
        x = common_grid_per_feature[f].centers
        va, vb = by_a[f].interpolate(x), by_b[f].interpolate(x)
        rmsds.append(np.sqrt(np.mean((va - vb) ** 2)))
        weights.append(0.5 * (np.var(va) + np.var(vb)))
    return weighted_rmsd_agreement(rmsds, weights)


def agreement_matrix(
    results: Mapping[str, object] | Sequence[ImportanceResult],
    statistic: str = "top_k",
    method_category: Mapping[str, str] | None = None,
    k: int = 10,
    tolerance: int = 1,
    grids: Mapping[int, BinGrid] | None = None,
) -> AgreementMatrix:
    """Pairwise agreement over methods.

    ``results`` maps method id to an ImportanceResult (ranking statistics) or
    to a list of EffectCurve (``statistic="effect"``, needs ``grids``).
    """
    if not isinstance(results, Mapping):
        results = {r.method_id: r for r in results}
    ids = tuple(results)
    if len(ids) < 2:
        raise ValueError("agreement needs at least 2 methods")
    if statistic == "top_k":
        pair = lambda a, b: top_k_feature_agreement(a, b, k)
    elif statistic == "rank":
        pair = lambda a, b: rank_agreement(a, b, k, tolerance)
    elif statistic == "effect":
        if grids is None:
            raise ValueError("effect agreement needs common grids")
        pair = lambda a, b: effect_agreement(a, b, grids)
    else:
        raise ValueError(f"unknown statistic {statistic!r}")

    m = len(ids)
    values = np.eye(m)
    for i, j in combinations(range(m), 2):
        values[i, j] = values[j, i] = pair(results[ids[i]], results[ids[j]])

    category = {mid: (method_category or {}).get(mid, default_category(mid)) for mid in ids}
    off = values[~np.eye(m, dtype=bool)]
    cross = [
        values[i, j]
        for i in range(m)
        for j in range(m)
        if category[ids[i]] == "importance" and category[ids[j]] == "relevance"
    ]
    summary = {
        "mean_off_diagonal": float(off.mean()),
        "mean_importance_vs_relevance": float(np.mean(cross)) if cross else None,
    }
    clamped = bool(statistic == "effect" and np.any(values < 0))
    return AgreementMatrix(ids, values, statistic, summary, clamped)
