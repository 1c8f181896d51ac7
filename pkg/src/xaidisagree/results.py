"""Result containers shared by the ranking, effect and attribution methods."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np


def rank_descending(scores: Sequence[float]) -> np.ndarray:
    """Unit indices ordered by descending score; ties go to the lowest index."""
    scores = np.asarray(scores, dtype=float)
    return np.lexsort((np.arange(len(scores)), -scores))


def _floats(values) -> list:
    return [float(v) for v in np.asarray(values, dtype=float).ravel()]


@dataclass(frozen=True)
class ImportanceResult:
    """Scores and ordering of features (or groups) from one ranking method.

    ``rank`` lists unit indices from most to least important. For multipass
    runs it is the selection order rather than a sort of ``scores``.
    """

    method_id: str
    unit_names: tuple[str, ...]
    scores: np.ndarray
    per_round_scores: np.ndarray
    rank: np.ndarray
    baseline_score: float = float("nan")
    direction: str = "backward"
    mode: str = "single"
    unit_members: tuple[tuple[int, ...], ...] | None = None
    extras: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=float)
        per_round = np.atleast_2d(np.asarray(self.per_round_scores, dtype=float))
        rank = np.asarray(self.rank, dtype=np.int64)
        names = tuple(self.unit_names)
        if len(scores) != len(names):
            raise ValueError("scores and unit_names differ in length")
        if per_round.shape[1] != len(names):
            raise ValueError("per_round_scores must have one column per unit")
        if sorted(rank.tolist()) != list(range(len(names))):
            raise ValueError("rank must be a permutation of unit indices")
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "per_round_scores", per_round)
        object.__setattr__(self, "rank", rank)
        object.__setattr__(self, "unit_names", names)

    @classmethod
    def from_rounds(cls, method_id, unit_names, per_round_scores, **kwargs) -> "ImportanceResult":
        per_round = np.atleast_2d(np.asarray(per_round_scores, dtype=float))
        scores = per_round.mean(axis=0)
        rank = kwargs.pop("rank", None)
        if rank is None:
            rank = rank_descending(scores)
        return cls(method_id, tuple(unit_names), scores, per_round, rank, **kwargs)

    @property
    def ranked_names(self) -> list[str]:
        return [self.unit_names[i] for i in self.rank]

    def position_of(self) -> dict[str, int]:
        """Map unit name to its 0-based position in the ranking."""
        return {self.unit_names[i]: pos for pos, i in enumerate(self.rank)}

    def top(self, k: int) -> list[str]:
        return self.ranked_names[: min(k, len(self.rank))]

    def to_dict(self) -> dict:
        return {
            "method_id": self.method_id,
            "direction": self.direction,
            "mode": self.mode,
            "unit_names": list(self.unit_names),
            "scores": _floats(self.scores),
            "rank": [int(i) for i in self.rank],
            "baseline_score": float(self.baseline_score),
            "per_round_scores": [_floats(row) for row in self.per_round_scores],
            "extras": _jsonable(self.extras),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ImportanceResult":
        return cls(
            doc["method_id"],
            tuple(doc["unit_names"]),
            np.array(doc["scores"], dtype=float),
            np.array(doc["per_round_scores"], dtype=float),
            np.array(doc["rank"], dtype=np.int64),
            baseline_score=float(doc.get("baseline_score", float("nan"))),
            direction=doc.get("direction", "backward"),
            mode=doc.get("mode", "single"),
            extras=doc.get("extras", {}),
        )

    def csv_rows(self) -> list[list]:
        """Flat rows ``(method, unit, score, position)`` in unit order."""
        pos = self.position_of()
        return [
            [self.method_id, name, float(s), pos[name] + 1]
            for name, s in zip(self.unit_names, self.scores)
        ]


@dataclass(frozen=True)
class EffectCurve:
    """One feature's centered effect in probability units."""

    feature_index: int
    grid: np.ndarray
    values: np.ndarray
    method_id: str
    bin_counts: np.ndarray
    feature_name: str = ""

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        counts = np.asarray(self.bin_counts, dtype=np.int64)
        if grid.shape != values.shape:
            raise ValueError("grid and values differ in length")
        if grid.size > 1 and not np.all(np.diff(grid) > 0):
            raise ValueError("grid must be strictly increasing")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "bin_counts", counts)

    def interpolate(self, x: np.ndarray) -> np.ndarray:
        return np.interp(np.asarray(x, dtype=float), self.grid, self.values)

    def to_dict(self) -> dict:
        return {
            "feature": int(self.feature_index),
            "feature_name": self.feature_name,
            "method": self.method_id,
            "grid": _floats(self.grid),
            "values": _floats(self.values),
            "counts": [int(c) for c in self.bin_counts],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "EffectCurve":
        return cls(doc["feature"], doc["grid"], doc["values"], doc["method"], doc["counts"], doc.get("feature_name", ""))


@dataclass(frozen=True)
class EventRateCurve:
    feature_index: int
    bin_edges: np.ndarray
    posterior_mean: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    prior_alpha: float
    prior_beta: float
    n_positive: np.ndarray
    n_negative: np.ndarray
    feature_name: str = ""

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    def to_dict(self) -> dict:
        return {
            "feature": int(self.feature_index),
            "feature_name": self.feature_name,
            "bin_edges": _floats(self.bin_edges),
            "posterior_mean": _floats(self.posterior_mean),
            "ci_low": _floats(self.ci_low),
            "ci_high": _floats(self.ci_high),
            "n_positive": [int(v) for v in self.n_positive],
            "n_negative": [int(v) for v in self.n_negative],
            "prior_alpha": float(self.prior_alpha),
            "prior_beta": float(self.prior_beta),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "EventRateCurve":
        arr = lambda k, t=float: np.array(doc[k], dtype=t)
        return cls(
            doc["feature"],
            arr("bin_edges"),
            arr("posterior_mean"),
            arr("ci_low"),
            arr("ci_high"),
            doc["prior_alpha"],
            doc["prior_beta"],
            arr("n_positive", np.int64),
            arr("n_negative", np.int64),
            doc.get("feature_name", ""),
        )


@dataclass(frozen=True)
class AttributionSet:
    """Per-row additive contributions ``phi`` with bias ``phi0``."""

    phi: np.ndarray
    phi0: np.ndarray
    method_id: str
    explained_row_indices: np.ndarray
    feature_names: tuple[str, ...] = ()
    extras: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        phi = np.atleast_2d(np.asarray(self.phi, dtype=float))
        phi0 = np.atleast_1d(np.asarray(self.phi0, dtype=float))
        rows = np.atleast_1d(np.asarray(self.explained_row_indices, dtype=np.int64))
        if phi.shape[0] != phi0.shape[0] or phi.shape[0] != rows.shape[0]:
            raise ValueError("phi, phi0 and explained rows disagree in length")
        if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(phi0))):
            raise ValueError("attributions must be finite")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "phi0", phi0)
        object.__setattr__(self, "explained_row_indices", rows)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    def reconstruction(self) -> np.ndarray:
        return self.phi0 + self.phi.sum(axis=1)

    def to_dict(self) -> dict:
        return {
            "method": self.method_id,
            "feature_names": list(self.feature_names),
            "rows": [int(r) for r in self.explained_row_indices],
            "phi0": _floats(self.phi0),
            "phi": [_floats(row) for row in self.phi],
            "extras": _jsonable(self.extras),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "AttributionSet":
        return cls(
            np.array(doc["phi"], dtype=float),
            np.array(doc["phi0"], dtype=float),
            doc["method"],
            np.array(doc["rows"], dtype=np.int64),
            tuple(doc.get("feature_names", ())),
            doc.get("extras", {}),
        )


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj
