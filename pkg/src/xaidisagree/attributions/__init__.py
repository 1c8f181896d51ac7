"""Local additive attributions and their global aggregation."""

from __future__ import annotations

import numpy as np

from .._random import parallel_map
from ..data import TabularDataset
from ..results import AttributionSet
from .aggregate import aggregate_attributions, background_rows, binned_effect, global_relevance, sample_rows
from .lime import LimeExplanation, QuartileDiscretizer, lime_explain
from .sage import log_loss, sage_values
from .shapley import (
    MAX_EXACT_FEATURES,
    CoalitionValue,
    PartitionError,
    PartitionTree,
    exact_shapley,
    owen_values,
)
from .tree_interpreter import tree_interpreter


def explain_rows(
    method: str,
    model,
    data: TabularDataset,
    rows: np.ndarray,
    background: np.ndarray | None = None,
    partition: PartitionTree | None = None,
    seed: int = 0,
    n_jobs: int = 1,
    lime_samples: int = 2500,
) -> AttributionSet:
    """Attributions for ``data.features[rows]`` with one of
    ``shap``, ``owen``, ``lime`` or ``ti``."""
    rows = np.asarray(rows, dtype=np.int64)
    X = data.features[rows]
    extras: dict = {}
    if method == "ti":
        phi, phi0 = tree_interpreter(model, X)
        return AttributionSet(phi, phi0, "ti", rows, data.feature_names)

    if method in ("shap", "owen"):
        if background is None:
            background = data.features[background_rows(data.n_examples, seed=seed)]
        value = CoalitionValue(model, background)
        if method == "shap":
            out = parallel_map(lambda x: exact_shapley(model, x, value), X, n_jobs)
        else:
            part = partition or PartitionTree.flat(data.n_features)
            out = parallel_map(lambda x: owen_values(model, x, value, part), X, n_jobs)
            extras["partition"] = part.to_list()
    elif method == "lime":
        disc = QuartileDiscretizer(data)
        explanations = parallel_map(
            lambda t: lime_explain(model, t[1], data, n_samples=lime_samples, seed=seed, row_key=int(t[0]), discretizer=disc),
            list(zip(rows, X)),
            n_jobs,
        )
        out = [(e.coefficients, e.intercept) for e in explanations]
        extras["ridge_fallback_rows"] = [int(r) for r, e in zip(rows, explanations) if e.used_ridge_fallback]
    else:
        raise ValueError(f"unknown attribution method {method!r}")
    phi = np.array([o[0] for o in out]).reshape(len(rows), data.n_features)
    phi0 = np.array([o[1] for o in out], dtype=float)
    return AttributionSet(phi, phi0, method, rows, data.feature_names, extras)


__all__ = [
    "MAX_EXACT_FEATURES",
    "CoalitionValue",
    "LimeExplanation",
    "PartitionError",
    "PartitionTree",
    "QuartileDiscretizer",
    "aggregate_attributions",
    "background_rows",
    "binned_effect",
    "exact_shapley",
    "explain_rows",
    "global_relevance",
    "lime_explain",
    "log_loss",
    "owen_values",
    "sage_values",
    "sample_rows",
    "tree_interpreter",
]
