"""CART classification trees and a bootstrap random forest."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .._random import parallel_map, substream
from ..data import TabularDataset

LEAF = -1


@dataclass(frozen=True)
class DecisionTree:
    """Array-backed binary tree.

    Node ``i`` is a leaf when ``feature[i] == -1``. ``value[i]`` is the
    positive fraction of training rows reaching node ``i`` (for a leaf this is
    its prediction). Rows go left when ``x[feature] <= threshold``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray
    impurity: np.ndarray

    def __post_init__(self):
        for name, dtype in [
            ("feature", np.int64),
            ("threshold", float),
            ("left", np.int64),
            ("right", np.int64),
            ("value", float),
            ("n_samples", np.int64),
            ("impurity", float),
        ]:
            arr = np.asarray(getattr(self, name), dtype=dtype)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        internal = self.feature != LEAF
        if np.any(internal & ((self.left < 0) | (self.right < 0))):
            raise ValueError("every internal node needs two children")
        object.__setattr__(self, "_routing", self._build_routing(internal))

    def _build_routing(self, internal):
        own = np.arange(self.n_nodes)
        feature = np.where(internal, self.feature, 0)
        threshold = np.where(internal, self.threshold, np.inf)
        left = np.where(internal, self.left, own)
        right = np.where(internal, self.right, own)
        max_depth = 0
        stack = [(0, 0)] if self.n_nodes else []
        while stack:
            node, depth = stack.pop()
            max_depth = max(max_depth, depth)
            if internal[node]:
                stack.append((int(self.left[node]), depth + 1))
                stack.append((int(self.right[node]), depth + 1))
        return feature, threshold, left, right, max_depth

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def root_fraction(self) -> float:
        return float(self.value[0])

    def apply(self, rows: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row."""
        rows = np.asarray(rows, dtype=float)
        feature, threshold, left, right, depth = self._routing
        flat = rows.ravel()
        offsets = np.arange(rows.shape[0]) * rows.shape[1]
        node = np.zeros(rows.shape[0], dtype=np.int64)
        # leaves route to themselves, so a fixed number of steps is enough
        for _ in range(depth):
            go_left = flat[offsets + feature[node]] <= threshold[node]
            node = np.where(go_left, left[node], right[node])
        return node

    def predict_proba(self, rows: np.ndarray) -> np.ndarray:
        return self.value[self.apply(rows)]

    def decision_path(self, row: np.ndarray) -> list[int]:
        """Node indices visited from the root to the leaf for one row."""
        path = [0]
        node = 0
        while self.feature[node] != LEAF:
            f = self.feature[node]
            node = int(self.left[node] if row[f] <= self.threshold[node] else self.right[node])
            path.append(node)
        return path

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": [float(v) for v in self.threshold],
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": [float(v) for v in self.value],
            "n_samples": self.n_samples.tolist(),
            "impurity": [float(v) for v in self.impurity],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DecisionTree":
        return cls(**{k: doc[k] for k in ("feature", "threshold", "left", "right", "value", "n_samples", "impurity")})


@dataclass(frozen=True)
class RandomForestModel:
    trees: tuple[DecisionTree, ...]
    n_features: int
    features_per_split: int
    trained_with_bootstrap: bool = True

    def __post_init__(self):
        if len(self.trees) < 1:
            raise ValueError("a forest needs at least one tree")
        object.__setattr__(self, "trees", tuple(self.trees))

    def predict_proba(self, rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != self.n_features:
            raise ValueError(f"expected rows of width {self.n_features}, got shape {rows.shape}")
        total = np.zeros(rows.shape[0])
        for tree in self.trees:
            total += tree.predict_proba(rows)
        return total / len(self.trees)


def _gini(pos, n):
    p = pos / n
    return 2.0 * p * (1.0 - p)


def _best_split(X, y, idx, features, min_leaf):
    """Lowest weighted child Gini over candidate features, or None."""
    n = idx.size
    best = None
    best_imp = np.inf
    for f in features:
        x = X[idx, f]
        order = np.argsort(x, kind="stable")
        xs = x[order]
        cum_pos = np.cumsum(y[idx][order])
        n_left = np.arange(1, n)
        pos_left = cum_pos[:-1]
        pos_right = cum_pos[-1] - pos_left
        n_right = n - n_left
        valid = (xs[:-1] < xs[1:]) & (n_left >= min_leaf) & (n_right >= min_leaf)
        if not valid.any():
            continue
        weighted = (n_left * _gini(pos_left, n_left) + n_right * _gini(pos_right, n_right)) / n
        weighted = np.where(valid, weighted, np.inf)
        i = int(np.argmin(weighted))
        if weighted[i] < best_imp:
            thr = 0.5 * (xs[i] + xs[i + 1])
            if not (xs[i] <= thr < xs[i + 1]):
                thr = xs[i]
            best_imp = weighted[i]
            best = (int(f), float(thr), float(weighted[i]))
    return best


def _grow_tree(X, y, max_depth, min_leaf, n_sub, rng) -> DecisionTree:
    d = X.shape[1]
    nodes = {k: [] for k in ("feature", "threshold", "left", "right", "value", "n_samples", "impurity")}

    def new_node(idx):
        pos = float(y[idx].sum())
        for k, v in (
            ("feature", LEAF),
            ("threshold", 0.0),
            ("left", LEAF),
            ("right", LEAF),
            ("value", pos / idx.size),
            ("n_samples", idx.size),
            ("impurity", _gini(pos, idx.size)),
        ):
            nodes[k].append(v)
        return len(nodes["feature"]) - 1

    root = new_node(np.arange(X.shape[0]))
    stack = [(root, np.arange(X.shape[0]), 0)]
    while stack:
        node, idx, depth = stack.pop()
        if depth >= max_depth or nodes["impurity"][node] <= 0.0 or idx.size < 2 * min_leaf:
            continue
        features = np.sort(rng.choice(d, size=n_sub, replace=False))
        split = _best_split(X, y, idx, features, min_leaf)
        if split is None:
            continue
        f, thr, child_imp = split
        if nodes["impurity"][node] - child_imp <= 1e-15:
            continue
        mask = X[idx, f] <= thr
        left_idx, right_idx = idx[mask], idx[~mask]
        left = new_node(left_idx)
        right = new_node(right_idx)
        nodes["feature"][node] = f
        nodes["threshold"][node] = thr
        nodes["left"][node] = left
        nodes["right"][node] = right
        # right pushed first so the left subtree is expanded first
        stack.append((right, right_idx, depth + 1))
        stack.append((left, left_idx, depth + 1))
    return DecisionTree(**nodes)


def train_random_forest(
    data: TabularDataset,
    n_trees: int = 50,
    max_depth: int = 8,
    min_leaf: int = 5,
    seed: int = 0,
    features_per_split: int | None = None,
    bootstrap: bool = True,
    n_jobs: int = 1,
) -> RandomForestModel:
    """Grow ``n_trees`` Gini trees, each on its own bootstrap resample."""
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    if min_leaf < 1:
        raise ValueError("min_leaf must be >= 1")
    if data.n_examples < 1:
        raise ValueError("empty dataset")
    X, y = data.features, data.targets.astype(float)
    d = data.n_features
    n_sub = features_per_split or math.ceil(math.sqrt(d))
    n_sub = min(max(n_sub, 1), d)

    def build(t):
        if bootstrap:
            rows = bootstrap_rows(seed, t, X.shape[0])
        else:
            rows = np.arange(X.shape[0])
        return _grow_tree(X[rows], y[rows], max_depth, min_leaf, n_sub, substream(seed, "split-features", t))

    trees = parallel_map(build, range(n_trees), n_jobs)
    return RandomForestModel(tuple(trees), d, n_sub, bootstrap)


def bootstrap_rows(seed: int, tree_index: int, n_examples: int) -> np.ndarray:
    """Training rows used for one tree of a bootstrap forest."""
    return substream(seed, "bootstrap", tree_index).integers(0, n_examples, size=n_examples)
