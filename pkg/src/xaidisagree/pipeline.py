"""Config-driven runs: train or load a model, explain it, compare the explanations."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import platform
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np
import scipy

from . import __version__
from .attributions import (
    MAX_EXACT_FEATURES,
    PartitionTree,
    background_rows,
    binned_effect,
    explain_rows,
    global_relevance,
    sage_values,
    sample_rows,
)
from .data import BinGrid, DataError, TabularDataset, cluster_features, correlation_matrix, load_csv, quantile_bins
from .disagreement import AgreementMatrix, agreement_matrix, default_category
from .effects import ale_first_order, ale_variance_ranking, event_rate_histogram, partial_dependence
from .importance import grouped_permutation_importance, permutation_importance
from .models import (
    LogisticRegressionModel,
    RandomForestModel,
    coefficient_relevance,
    gini_importance,
    load_model,
    model_to_dict,
    train_logistic,
    train_random_forest,
)
from .results import AttributionSet, EffectCurve, EventRateCurve, ImportanceResult
from .synthetic import BUILTIN_PREFIX, resolve_builtin

logger = logging.getLogger(__name__)

ALL_METHODS = (
    "coef",
    "gini",
    "bsp",
    "fsp",
    "bmp",
    "fmp",
    "grouped",
    "grouped_only",
    "pd",
    "ale",
    "ale_var",
    "shap",
    "owen",
    "lime",
    "ti",
    "sage",
    "event_rate",
)
PERMUTATION = {"bsp": ("backward", "single"), "fsp": ("forward", "single"), "bmp": ("backward", "multi"), "fmp": ("forward", "multi")}
ATTRIBUTION = ("shap", "owen", "lime", "ti")
CURVE_METHODS = ("pd", "ale", "shap", "owen", "lime", "ti")
MODEL_DEFAULTS = {
    "logistic": {"l1_penalty": 0.0, "l2_penalty": 0.0, "max_iters": 5000, "tol": 1e-8},
    "random_forest": {"n_trees": 50, "max_depth": 8, "min_leaf": 5},
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    data_path: str
    target_column: str
    seed: int
    output_dir: str = "out"
    model: dict | None = None
    model_path: str | None = None
    methods: list[str] = field(default_factory=lambda: list(ALL_METHODS))
    n_rounds: int = 30
    top_k: int = 10
    n_bins: int = 30
    sample_cap: int = 50_000
    correlation_threshold: float = 0.5
    background_size: int = 100
    lime_samples: int = 2500
    sage_outer_samples: int = 2048
    sage_batch: int = 64
    eval_data_path: str | None = None

    def __post_init__(self):
        if self.seed is None or isinstance(self.seed, bool) or not isinstance(self.seed, int):
            raise ConfigError("seed is required and must be an integer")
        if (self.model is None) == (self.model_path is None):
            raise ConfigError("give exactly one of 'model' or 'model_path'")
        if self.model is not None:
            kind = self.model.get("kind")
            if kind not in MODEL_DEFAULTS:
                raise ConfigError(f"unknown model kind {kind!r}")
            unknown = set(self.model) - {"kind"} - set(MODEL_DEFAULTS[kind])
            if unknown:
                raise ConfigError(f"unknown {kind} hyperparameters: {sorted(unknown)}")
        bad = [m for m in self.methods if m not in ALL_METHODS]
        if bad:
            raise ConfigError(f"unknown methods: {bad}")
        if len(set(self.methods)) != len(self.methods):
            raise ConfigError("methods must not repeat")
        for name in ("n_rounds", "top_k", "n_bins", "sample_cap", "background_size", "lime_samples"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        missing = {"data_path", "target_column", "seed"} - set(doc)
        if missing:
            raise ConfigError(f"missing config keys: {sorted(missing)}")
        return cls(**doc)

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RunReport:
    manifest: dict = field(default_factory=dict)
    rankings: list[ImportanceResult] = field(default_factory=list)
    effects: list[EffectCurve] = field(default_factory=list)
    attributions: list[AttributionSet] = field(default_factory=list)
    agreement: list[AgreementMatrix] = field(default_factory=list)
    event_rate: list[EventRateCurve] = field(default_factory=list)
    skipped: dict[str, str] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)
    model: Any = field(default=None, repr=False)
    data: TabularDataset | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "manifest": self.manifest,
            "skipped": dict(self.skipped),
            "rankings": [r.to_dict() for r in self.rankings],
            "effects": [c.to_dict() for c in self.effects],
            "attributions": [a.to_dict() for a in self.attributions],
            "agreement": [m.to_dict() for m in self.agreement],
            "event_rate": [e.to_dict() for e in self.event_rate],
        }

    def method_ids(self) -> set[str]:
        ids = {r.method_id for r in self.rankings}
        ids |= {c.method_id for c in self.effects}
        ids |= {a.method_id for a in self.attributions}
        if self.event_rate:
            ids.add("event_rate")
        return ids


def load_dataset(path: str, target_column: str) -> TabularDataset:
    if path.startswith(BUILTIN_PREFIX):
        try:
            return resolve_builtin(path)
        except ValueError as exc:
            raise DataError(str(exc)) from exc
    return load_csv(path, target_column)


def build_model(config: RunConfig, data: TabularDataset, n_jobs: int = 1):
    if config.model_path is not None:
        model = load_model(config.model_path)
        width = model.n_features
        if width != data.n_features:
            raise DataError(f"model expects {width} features, dataset has {data.n_features}")
        return model
    spec = dict(MODEL_DEFAULTS[config.model["kind"]])
    spec.update({k: v for k, v in config.model.items() if k != "kind"})
    if config.model["kind"] == "logistic":
        return train_logistic(data, **spec)
    return train_random_forest(data, seed=config.seed, n_jobs=n_jobs, **spec)


def _feature_grids(data: TabularDataset, n_bins: int) -> dict[int, BinGrid]:
    grids = {}
    for j in range(data.n_features):
        try:
            grids[j] = quantile_bins(data.features[:, j], n_bins)
        except DataError:
            logger.info("feature %s is constant; no effect curve", data.feature_names[j])
    return grids


def _model_specific_skip(method: str, model) -> str | None:
    if method == "coef" and not isinstance(model, LogisticRegressionModel):
        return "model-specific method: coef requires a logistic model"
    if method in ("gini", "ti") and not isinstance(model, RandomForestModel):
        return f"model-specific method: {method} requires a random forest"
    return None


def compute_agreements(report: RunReport, grids: dict[int, BinGrid], top_k: int) -> list[AgreementMatrix]:
    """Top-k and rank agreement over feature rankings, effect agreement over curve sets."""
    matrices = []
    rankings = {r.method_id: r for r in report.rankings if r.mode not in ("grouped", "grouped_only")}
    category = {mid: default_category(mid) for mid in rankings}
    if len(rankings) >= 2:
        matrices.append(agreement_matrix(rankings, "top_k", category, k=top_k))
        matrices.append(agreement_matrix(rankings, "rank", category, k=top_k))
    curve_sets: dict[str, list[EffectCurve]] = {}
    for c in report.effects:
        curve_sets.setdefault(c.method_id, []).append(c)
    if len(curve_sets) >= 2:
        matrices.append(agreement_matrix(curve_sets, "effect", grids=grids))
    return matrices


def run_pipeline(config: RunConfig, n_jobs: int = 1, with_agreement: bool = True) -> RunReport:
    """Run every requested method; incompatible methods are skipped with a reason."""
    data = load_dataset(config.data_path, config.target_column)
    report = RunReport()
    t0 = time.perf_counter()
    model = build_model(config, data, n_jobs)
    report.timings["model"] = time.perf_counter() - t0
    if config.eval_data_path:
        data = load_dataset(config.eval_data_path, config.target_column)
    d = data.n_features
    seed = config.seed
    grids = _feature_grids(data, config.n_bins)
    methods = [m for m in ALL_METHODS if m in config.methods]

    corr = None
    ale_curves: list[EffectCurve] | None = None

    def correlations():
        nonlocal corr
        if corr is None:
            corr = correlation_matrix(data) if data.n_examples >= 2 else np.eye(d)
        return corr

    def ale_set():
        nonlocal ale_curves
        if ale_curves is None:
            ale_curves = [ale_first_order(model, data, j, g) for j, g in grids.items()]
        return ale_curves

    explain_idx = sample_rows(data.n_examples, config.sample_cap, seed)
    background = data.features[background_rows(data.n_examples, config.background_size, seed)]
    status: dict[str, str] = {}

    for method in methods:
        start = time.perf_counter()
        reason = _model_specific_skip(method, model)
        if reason is None and method == "shap" and d > MAX_EXACT_FEATURES:
            reason = f"exact Shapley limited to {MAX_EXACT_FEATURES} features; use owen"
        if reason:
            report.skipped[method] = reason
            status[method] = "skipped"
            continue
        logger.info("running %s", method)
        if method == "coef":
            report.rankings.append(coefficient_relevance(model, feature_names=data.feature_names))
        elif method == "gini":
            report.rankings.append(gini_importance(model, data.feature_names))
        elif method in PERMUTATION:
            direction, mode = PERMUTATION[method]
            report.rankings.append(
                permutation_importance(
                    model, data, direction, mode, n_rounds=config.n_rounds, top_k=config.top_k, seed=seed, n_jobs=n_jobs
                )
            )
        elif method in ("grouped", "grouped_only"):
            groups = cluster_features(correlations(), config.correlation_threshold, data.feature_names)
            report.rankings.append(
                grouped_permutation_importance(model, data, groups, method, n_rounds=config.n_rounds, seed=seed, n_jobs=n_jobs)
            )
        elif method == "pd":
            report.effects.extend(partial_dependence(model, data, j, g) for j, g in grids.items())
        elif method == "ale":
            report.effects.extend(ale_set())
            if "ale_var" not in methods:
                report.rankings.append(_ale_var(ale_set(), data))
        elif method == "ale_var":
            report.rankings.append(_ale_var(ale_set(), data))
        elif method in ATTRIBUTION:
            partition = PartitionTree.from_correlation(correlations()) if method == "owen" else None
            attr = explain_rows(
                method,
                model,
                data,
                explain_idx,
                background=background,
                partition=partition,
                seed=seed,
                n_jobs=n_jobs,
                lime_samples=config.lime_samples,
            )
            report.attributions.append(attr)
            report.rankings.append(global_relevance(attr, data.feature_names))
            report.effects.extend(binned_effect(attr, data, j, g) for j, g in grids.items())
        elif method == "sage":
            report.rankings.append(
                sage_values(
                    model,
                    data,
                    n_outer_samples=config.sage_outer_samples,
                    batch=config.sage_batch,
                    seed=seed,
                )
            )
        elif method == "event_rate":
            report.event_rate.extend(event_rate_histogram(data, j, config.n_bins) for j in grids)
        status[method] = "ok"
        report.timings[method] = time.perf_counter() - start

    if with_agreement:
        report.agreement = compute_agreements(report, grids, config.top_k)

    report.manifest = {
        # output location does not affect results and is left out for reproducibility
        "config": {k: v for k, v in config.to_dict().items() if k != "output_dir"},
        "versions": {
            "xaidisagree": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "dataset": {"n_examples": data.n_examples, "n_features": d, "base_rate": data.base_rate},
        "model": model_to_dict(model)["kind"],
        "methods": {m: status.get(m, "skipped") for m in config.methods},
    }
    report.model = model
    report.data = data
    return report


def _ale_var(curves, data):
    names = [data.feature_names[c.feature_index] for c in sorted(curves, key=lambda c: c.feature_index)]
    result = ale_variance_ranking(curves, names)
    if len(names) == data.n_features:
        return result
    # constant features have no ALE curve; they rank last with zero score
    scores = np.zeros(data.n_features)
    for c, s in zip(sorted(curves, key=lambda c: c.feature_index), result.scores):
        scores[c.feature_index] = s
    return ImportanceResult.from_rounds("ale_var", data.feature_names, scores[None, :], mode="relevance")


def _csv_text(rows: list[list], header: list[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def report_json(report: RunReport) -> str:
    return json.dumps(report.to_dict(), indent=1, sort_keys=True, allow_nan=True)


def emit_report(report: RunReport, out_dir) -> dict[str, str]:
    """Write report.json and plot-ready CSVs; returns ``{relative path: sha256}``.

    Timings go to ``timings.json`` so that ``report.json`` depends only on the
    config and seed. ``manifest.json`` lists every file with its hash.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files: dict[str, str] = {}

    def write(rel: str, text: str):
        path = out / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        files[rel] = hashlib.sha256(text.encode("utf-8")).hexdigest()

    write("report.json", report_json(report))
    if report.rankings:
        rows = [row for r in report.rankings for row in r.csv_rows()]
        write("rankings.csv", _csv_text(rows, ["method", "unit", "score", "rank"]))
    if report.effects:
        rows = [
            [c.method_id, c.feature_name or str(c.feature_index), float(x), float(y)]
            for c in report.effects
            for x, y in zip(c.grid, c.values)
        ]
        write("effects.csv", _csv_text(rows, ["method", "feature", "x", "y"]))
    for m in report.agreement:
        write(f"agreement_{m.statistic_id}.csv", _csv_text(m.csv_rows(), ["row", "col", "value"]))
    for a in report.attributions:
        write(f"attributions/{a.method_id}.json", json.dumps(a.to_dict(), sort_keys=True))
        rows = [
            [int(r), name, float(v), float(p)]
            for i, r in enumerate(a.explained_row_indices)
            for name, v, p in zip(a.feature_names, _row_values(report, a, i), a.phi[i])
        ]
        write(f"attributions/{a.method_id}_cards.csv", _csv_text(rows, ["row", "feature", "value", "phi"]))
    write("timings.json", json.dumps(report.timings, indent=1, sort_keys=True))
    manifest_text = json.dumps({"files": files}, indent=1, sort_keys=True)
    (out / "manifest.json").write_text(manifest_text, encoding="utf-8")
    return files


def _row_values(report: RunReport, attr: AttributionSet, i: int):
    if report.data is None:
        return [float("nan")] * attr.phi.shape[1]
    return report.data.features[attr.explained_row_indices[i]]
