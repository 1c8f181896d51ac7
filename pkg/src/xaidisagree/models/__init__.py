"""Built-in classifiers, their model-specific rankings and JSON persistence."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Protocol, runtime_checkable

import numpy as np

from ..data import StandardizationParams
from ..results import ImportanceResult
from .forest import LEAF, DecisionTree, RandomForestModel, bootstrap_rows, train_random_forest
from .logistic import ConvergenceError, LogisticRegressionModel, train_logistic

MODEL_FORMAT_VERSION = 1


@runtime_checkable
class ProbabilisticClassifier(Protocol):
    def predict_proba(self, rows: np.ndarray) -> np.ndarray: ...


def predict_proba(model: ProbabilisticClassifier, rows: np.ndarray) -> np.ndarray:
    """Event probabilities for a batch of rows."""
    rows = np.asarray(rows, dtype=float)
    if rows.ndim == 1:
        rows = rows[None, :]
    width = getattr(model, "n_features", rows.shape[1])
    if rows.shape[1] != width:
        raise ValueError(f"width mismatch: model expects {width} features, got {rows.shape[1]}")
    return np.asarray(model.predict_proba(rows), dtype=float)


def _names(n, feature_names):
    return tuple(feature_names) if feature_names is not None else tuple(f"x{i}" for i in range(n))


def gini_importance(model: RandomForestModel, feature_names=None) -> ImportanceResult:
    """Mean decrease in impurity, weighted by node size and normalized to sum 1.

    ``per_round_scores`` holds one row per tree, scaled by the same
    normalization constant so that its column means equal ``scores``.
    """
    d = model.n_features
    per_tree = np.zeros((len(model.trees), d))
    for t, tree in enumerate(model.trees):
        n_total = tree.n_samples[0]
        for node in np.flatnonzero(tree.feature != LEAF):
            l, r = tree.left[node], tree.right[node]
            n_node = tree.n_samples[node]
            child = (tree.n_samples[l] * tree.impurity[l] + tree.n_samples[r] * tree.impurity[r]) / n_node
            per_tree[t, tree.feature[node]] += (n_node / n_total) * (tree.impurity[node] - child)
    total = per_tree.mean(axis=0).sum()
    if total > 0:
        per_tree = per_tree / total
    return ImportanceResult.from_rounds(
        "gini", _names(d, feature_names), per_tree, direction="backward", mode="model_specific"
    )


def input_stds(model: LogisticRegressionModel) -> StandardizationParams:
    """Spread of the inputs as the model sees them (after its own standardization)."""
    stds = np.where(model.standardization.stds > 0, 1.0, 0.0)
    return StandardizationParams(np.zeros_like(stds), stds)


def coefficient_relevance(
    model: LogisticRegressionModel, stds: StandardizationParams | None = None, feature_names=None
) -> ImportanceResult:
    """``|beta_i| * std(x_i)`` for each feature."""
    if stds is None:
        stds = input_stds(model)
    scores = np.abs(model.coefficients) * np.asarray(stds.stds, dtype=float)
    return ImportanceResult.from_rounds(
        "coef", _names(model.n_features, feature_names), scores[None, :], direction="backward", mode="relevance"
    )


def model_to_dict(model) -> dict:
    if isinstance(model, LogisticRegressionModel):
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "kind": "logistic",
            "bias": float(model.bias),
            "coefficients": [float(v) for v in model.coefficients],
            "standardization": {
                "means": [float(v) for v in model.standardization.means],
                "stds": [float(v) for v in model.standardization.stds],
            },
        }
    if isinstance(model, RandomForestModel):
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "kind": "random_forest",
            "n_features": int(model.n_features),
            "features_per_split": int(model.features_per_split),
            "trained_with_bootstrap": bool(model.trained_with_bootstrap),
            "trees": [t.to_dict() for t in model.trees],
        }
    raise TypeError(f"cannot serialize model of type {type(model).__name__}")


def model_from_dict(doc: dict):
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version: {version}")
    kind = doc.get("kind")
    if kind == "logistic":
        std = doc["standardization"]
        return LogisticRegressionModel(
            float(doc["bias"]),
            np.array(doc["coefficients"], dtype=float),
            StandardizationParams(np.array(std["means"], dtype=float), np.array(std["stds"], dtype=float)),
        )
    if kind == "random_forest":
        return RandomForestModel(
            tuple(DecisionTree.from_dict(t) for t in doc["trees"]),
            int(doc["n_features"]),
            int(doc["features_per_split"]),
            bool(doc["trained_with_bootstrap"]),
        )
    raise ValueError(f"unknown model kind: {kind!r}")


def save_model(model, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1), encoding="utf-8")


def load_model(path):
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


__all__ = [
    "ConvergenceError",
    "DecisionTree",
    "LogisticRegressionModel",
    "ProbabilisticClassifier",
    "RandomForestModel",
    "bootstrap_rows",
    "coefficient_relevance",
    "gini_importance",
    "input_stds",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "predict_proba",
    "save_model",
    "train_logistic",
    "train_random_forest",
]
