"""Tabular datasets, standardization, correlation-based grouping and quantile bins."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.cluster import hierarchy
from scipy.spatial.distance import squareform


class DataError(ValueError):
    """Raised for malformed datasets or degenerate inputs."""


@dataclass(frozen=True)
class TabularDataset:
    """Feature matrix with binary targets.

    Attributes:
        features: array of shape (n_examples, n_features).
        feature_names: unique names, one per column.
        targets: 0/1 integer vector of length n_examples.
    """

    features: np.ndarray
    feature_names: tuple[str, ...]
    targets: np.ndarray

    def __post_init__(self):
        X = np.array(self.features, dtype=float)
        if X.ndim != 2:
            raise DataError("features must be a 2-D matrix")
        y = np.asarray(self.targets)
        names = tuple(str(n) for n in self.feature_names)
        if X.shape[0] < 1:
            raise DataError("dataset must contain at least one example")
        if y.shape != (X.shape[0],):
            raise DataError("targets length must equal number of examples")
        if not np.all(np.isfinite(X)):
            raise DataError("all feature values must be finite")
        if not np.all((y == 0) | (y == 1)):
            raise DataError("non-binary target")
        if len(names) != X.shape[1]:
            raise DataError("feature_names length must equal n_features")
        if len(set(names)) != len(names):
            raise DataError("duplicate feature names")
        X.setflags(write=False)
        y = y.astype(np.int64)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "targets", y)
        object.__setattr__(self, "feature_names", names)

    @property
    def n_examples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def base_rate(self) -> float:
        return float(np.mean(self.targets))

    def subset(self, rows: np.ndarray) -> "TabularDataset":
        rows = np.asarray(rows)
        return TabularDataset(self.features[rows], self.feature_names, self.targets[rows])

    def with_features(self, features: np.ndarray) -> "TabularDataset":
        return TabularDataset(features, self.feature_names, self.targets)


@dataclass(frozen=True)
class FeatureGroups:
    """Ordered, disjoint, non-empty groups of feature indices."""

    groups: dict[str, tuple[int, ...]]

    def __post_init__(self):
        seen: set[int] = set()
        clean = {}
        for name, members in self.groups.items():
            members = tuple(sorted(int(m) for m in members))
            if not members:
                raise DataError(f"group {name!r} is empty")
            if seen.intersection(members):
                raise DataError("groups must be pairwise disjoint")
            if min(members) < 0:
                raise DataError(f"negative feature index in group {name!r}")
            seen.update(members)
            clean[str(name)] = members
        object.__setattr__(self, "groups", clean)

    @property
    def names(self) -> list[str]:
        return list(self.groups)

    def members(self) -> list[tuple[int, ...]]:
        return list(self.groups.values())

    def validate(self, n_features: int) -> None:
        for name, members in self.groups.items():
            if max(members) >= n_features:
                raise DataError(f"invalid group index in {name!r}: {max(members)} >= {n_features}")

    def is_partition(self, n_features: int) -> bool:
        covered = sorted(i for m in self.groups.values() for i in m)
        return covered == list(range(n_features))


@dataclass(frozen=True)
class StandardizationParams:
    means: np.ndarray
    stds: np.ndarray

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        safe = np.where(self.stds > 0, self.stds, 1.0)
        Z = (X - self.means) / safe
        Z[:, self.stds == 0] = 0.0
        return Z

    def inverse_transform(self, Z: np.ndarray) -> np.ndarray:
        return np.asarray(Z, dtype=float) * self.stds + self.means


@dataclass(frozen=True)
class BinGrid:
    """Bin edges with midpoints and the number of training rows per bin."""

    edges: np.ndarray
    centers: np.ndarray
    counts: np.ndarray = field(repr=False)

    @property
    def n_bins(self) -> int:
        return len(self.centers)

    def assign(self, values: np.ndarray) -> np.ndarray:
        """Bin index per value; bins are ``(e_k, e_{k+1}]`` with the first closed."""
        idx = np.searchsorted(self.edges, np.asarray(values, dtype=float), side="left") - 1
        return np.clip(idx, 0, self.n_bins - 1)


def load_csv(path: str | Path, target_column: str) -> TabularDataset:
    """Read a comma-separated file whose non-target columns are all real-valued."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"missing file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"empty file: {path}") from None
        if len(set(header)) != len(header):
            raise DataError("duplicate column names")
        if target_column not in header:
            raise DataError(f"target column {target_column!r} not found")
        t_idx = header.index(target_column)
        rows, targets = [], []
        for r, line in enumerate(reader, start=1):
            if not line:
                continue
            if len(line) != len(header):
                raise DataError(f"row {r} has {len(line)} cells, expected {len(header)}")
            values = []
            for c, cell in enumerate(line):
                cell = cell.strip()
                if cell == "":
                    raise DataError(f"missing value at row {r}, column {header[c]}")
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(f"non-numeric cell at row {r}, column {header[c]}: {cell!r}") from None
                if not math.isfinite(v):
                    raise DataError(f"non-finite value at row {r}, column {header[c]}")
                values.append(v)
            label = values.pop(t_idx)
            if label not in (0.0, 1.0):
                raise DataError(f"non-binary target at row {r}: {label}")
            rows.append(values)
            targets.append(int(label))
    if not rows:
        raise DataError("dataset must contain at least one example")
    names = [h for i, h in enumerate(header) if i != t_idx]
    return TabularDataset(np.array(rows, dtype=float), tuple(names), np.array(targets))


def save_csv(data: TabularDataset, path: str | Path, target_column: str = "target") -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([*data.feature_names, target_column])
        for row, label in zip(data.features, data.targets):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])


def standardize(data: TabularDataset) -> tuple[TabularDataset, StandardizationParams]:
    """Zero-mean, unit population-std columns; constant columns become zeros."""
    if data.n_examples < 2:
        raise DataError("standardize needs at least 2 examples")
    X = data.features
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    # spreads at rounding level are treated as constant
    scale = np.maximum(np.abs(means), 1.0)
    stds = np.where(stds <= 1e-12 * scale, 0.0, stds)
    params = StandardizationParams(means, stds)
    return data.with_features(params.transform(X)), params


def correlation_matrix(data: TabularDataset) -> np.ndarray:
    """Pearson correlations, with 0 for any pair involving a constant feature."""
    if data.n_examples < 2:
        raise DataError("correlation needs at least 2 examples")
    X = data.features - data.features.mean(axis=0)
    norms = np.sqrt((X**2).sum(axis=0))
    const = norms <= 1e-12 * np.maximum(np.abs(data.features).max(axis=0), 1.0) * math.sqrt(data.n_examples)
    safe = np.where(const, 1.0, norms)
    Xn = X / safe
    corr = Xn.T @ Xn
    corr[const, :] = 0.0
    corr[:, const] = 0.0
    diag = np.where(const, 0.0, 1.0)
    np.fill_diagonal(corr, diag)
    corr = np.clip((corr + corr.T) / 2.0, -1.0, 1.0)
    return corr


def _linkage(corr: np.ndarray) -> np.ndarray:
    corr = np.asarray(corr, dtype=float)
    if corr.ndim != 2 or corr.shape[0] != corr.shape[1]:
        raise DataError("correlation matrix must be square")
    if not np.allclose(corr, corr.T):
        raise DataError("correlation matrix must be symmetric")
    dist = 1.0 - np.abs(corr)
    np.fill_diagonal(dist, 0.0)
    dist = np.clip(dist, 0.0, None)
    return hierarchy.linkage(squareform(dist, checks=False), method="complete")


def cluster_features(
    corr: np.ndarray, threshold: float = 0.5, feature_names: Sequence[str] | None = None
) -> FeatureGroups:
    """Complete-linkage clusters on ``1 - |corr|`` cut at ``1 - threshold``.

    Groups are ordered by their lowest member index and named after their
    members when ``feature_names`` is given.
    """
    d = np.asarray(corr).shape[0]
    if d == 1:
        labels = np.array([1])
    else:
        labels = hierarchy.fcluster(_linkage(corr), t=1.0 - threshold, criterion="distance")
    by_label: dict[int, list[int]] = {}
    for i, lab in enumerate(labels):
        by_label.setdefault(int(lab), []).append(i)
    clusters = sorted(by_label.values(), key=min)
    groups = {}
    for k, members in enumerate(clusters):
        if feature_names is not None:
            name = "+".join(feature_names[i] for i in members)
        else:
            name = f"group_{k}"
        groups[name] = tuple(members)
    return FeatureGroups(groups)


def quantile_bins(values: np.ndarray, n_bins: int) -> BinGrid:
    """Equal-frequency bins from linearly interpolated sample quantiles."""
    values = np.asarray(values, dtype=float).ravel()
    if n_bins < 1:
        raise DataError("n_bins must be >= 1")
    if values.size == 0:
        raise DataError("values must be non-empty")
    lo, hi = values.min(), values.max()
    if hi - lo <= 0:
        raise DataError("degenerate feature: zero spread")
    edges = np.quantile(values, np.linspace(0.0, 1.0, n_bins + 1), method="linear")
    edges = np.unique(edges)
    if edges.size < 2:
        raise DataError("degenerate feature: zero spread")
    margin = 1e-9 * max(hi - lo, abs(lo), abs(hi))
    edges = edges.copy()
    edges[0] -= margin
    edges[-1] += margin
    centers = 0.5 * (edges[:-1] + edges[1:])
    grid = BinGrid(edges, centers, np.zeros(len(centers), dtype=np.int64))
    counts = np.bincount(grid.assign(values), minlength=len(centers)).astype(np.int64)
    return BinGrid(edges, centers, counts)
