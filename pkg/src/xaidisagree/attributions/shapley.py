"""Exact Shapley and Owen values under a marginal (interventional) value function."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Union

import numpy as np
from scipy.cluster import hierarchy

from ..data import FeatureGroups, _linkage
from ..models import predict_proba

MAX_EXACT_FEATURES = 12
_CHUNK_ROWS = 262_144

Node = Union[int, tuple]


class PartitionError(ValueError):
    pass


def _leaves(node: Node) -> list[int]:
    if isinstance(node, (int, np.integer)):
        return [int(node)]
    out = []
    for child in node:
        out.extend(_leaves(child))
    return out


@dataclass(frozen=True)
class PartitionTree:
    """Nested coalition structure; leaves are feature indices.

    ``root`` is a tuple of children, each either a feature index or another
    tuple. ``PartitionTree((0, 1, 2))`` is the flat structure (plain Shapley),
    ``PartitionTree(((0, 1), (2,)))`` puts features 0 and 1 in one block.
    """

    root: tuple

    def __post_init__(self):
        root = self._normalize(self.root)
        if isinstance(root, int):
            root = (root,)
        object.__setattr__(self, "root", root)
        leaves = _leaves(root)
        if sorted(leaves) != list(range(len(leaves))) or not leaves:
            raise PartitionError("partition leaves must be exactly the feature indices 0..d-1, each once")

    @classmethod
    def _normalize(cls, node):
        if isinstance(node, (int, np.integer)):
            return int(node)
        if isinstance(node, (list, tuple)):
            if len(node) == 0:
                raise PartitionError("empty block in partition")
            return tuple(cls._normalize(c) for c in node)
        raise PartitionError(f"malformed partition node: {node!r}")

    @property
    def n_features(self) -> int:
        return len(_leaves(self.root))

    @classmethod
    def flat(cls, n_features: int) -> "PartitionTree":
        return cls(tuple(range(n_features)))

    @classmethod
    def from_groups(cls, groups: FeatureGroups) -> "PartitionTree":
        return cls(tuple(tuple(m) for m in groups.members()))

    @classmethod
    def from_correlation(cls, corr: np.ndarray) -> "PartitionTree":
        """Binary hierarchy from complete-linkage clustering on ``1 - |corr|``."""
        d = np.asarray(corr).shape[0]
        if d == 1:
            return cls((0,))
        tree = hierarchy.to_tree(_linkage(corr))

        def convert(node):
            if node.is_leaf():
                return int(node.id)
            left, right = convert(node.get_left()), convert(node.get_right())
            # lower first leaf first, for a canonical layout
            if min(_leaves(left)) > min(_leaves(right)):
                left, right = right, left
            return (left, right)

        root = convert(tree)
        return cls(root if isinstance(root, tuple) else (root,))

    def to_list(self):
        def conv(node):
            return node if isinstance(node, int) else [conv(c) for c in node]

        return conv(self.root)


def _shapley_weight(size: int, n: int) -> float:
    return math.factorial(size) * math.factorial(n - size - 1) / math.factorial(n)


class CoalitionValue:
    """``v(S)`` = mean prediction with features in S taken from the instance
    and the rest from each background row."""

    def __init__(self, model, background: np.ndarray):
        self.model = model
        self.background = np.asarray(background, dtype=float)
        if self.background.ndim != 2 or self.background.shape[0] == 0:
            raise ValueError("background must be a non-empty matrix")
        self.d = self.background.shape[1]

    def masks_from_ints(self, codes: np.ndarray) -> np.ndarray:
        codes = np.asarray(codes, dtype=np.int64)
        return ((codes[:, None] >> np.arange(self.d)) & 1).astype(bool)

    def __call__(self, instance: np.ndarray, masks: np.ndarray) -> np.ndarray:
        instance = np.asarray(instance, dtype=float)
        masks = np.asarray(masks, dtype=bool)
        m = self.background.shape[0]
        per_chunk = max(1, _CHUNK_ROWS // m)
        out = np.empty(masks.shape[0])
        for start in range(0, masks.shape[0], per_chunk):
            block = masks[start : start + per_chunk]
            rows = np.where(block[:, None, :], instance[None, None, :], self.background[None, :, :])
            preds = predict_proba(self.model, rows.reshape(-1, self.d))
            out[start : start + per_chunk] = preds.reshape(block.shape[0], m).mean(axis=1)
        return out


def exact_shapley(model, instance, background) -> tuple[np.ndarray, float]:
    """Shapley values by enumerating all ``2**d`` coalitions.

    Returns ``(phi, phi0)`` where ``phi0`` is the mean background prediction.
    """
    value = background if isinstance(background, CoalitionValue) else CoalitionValue(model, _rows(background))
    d = value.d
    if d > MAX_EXACT_FEATURES:
        raise ValueError(
            f"exact Shapley enumeration is limited to {MAX_EXACT_FEATURES} features (got {d}); "
            "use owen_values with a feature partition instead"
        )
    codes = np.arange(2**d, dtype=np.int64)
    v = value(instance, value.masks_from_ints(codes))
    sizes = np.array([bin(c).count("1") for c in codes])
    weights = np.array([_shapley_weight(s, d) if s < d else 0.0 for s in sizes])
    phi = np.empty(d)
    for j in range(d):
        bit = 1 << j
        without = codes[(codes & bit) == 0]
        phi[j] = np.sum(weights[without] * (v[without | bit] - v[without]))
    return phi, float(v[0])


def _owen_terms(root: tuple):
    """Yield ``(feature, weight, coalition_code)`` for every marginal term."""
    terms = []

    def block_code(block):
        code = 0
        for j in _leaves(block):
            code |= 1 << j
        return code

    def recurse(node, context_code, weight):
        children = node
        m = len(children)
        codes = [block_code(c) for c in children]
        for k, child in enumerate(children):
            others = [i for i in range(m) if i != k]
            for size in range(len(others) + 1):
                w = _shapley_weight(size, m)
                for subset in combinations(others, size):
                    code = context_code
                    for i in subset:
                        code |= codes[i]
                    if isinstance(child, int):
                        terms.append((child, weight * w, code))
                    else:
                        recurse(child, code, weight * w)

    recurse(root, 0, 1.0)
    return terms


def owen_values(model, instance, background, partition: PartitionTree) -> tuple[np.ndarray, float]:
    """Owen values for a nested coalition structure.

    At every level the sibling blocks play a Shapley game among themselves;
    a feature's value is the weighted sum of its marginal contributions over
    all sibling-block coalitions on its path from the root.
    """
    if not isinstance(partition, PartitionTree):
        partition = PartitionTree(partition)
    value = background if isinstance(background, CoalitionValue) else CoalitionValue(model, _rows(background))
    d = value.d
    if partition.n_features != d:
        raise PartitionError(f"partition covers {partition.n_features} features, data has {d}")
    terms = _owen_terms(partition.root)
    feats = np.array([t[0] for t in terms], dtype=np.int64)
    weights = np.array([t[1] for t in terms])
    without = np.array([t[2] for t in terms], dtype=np.int64)
    with_ = without | (np.int64(1) << feats)
    needed, inverse = np.unique(np.concatenate([[0], without, with_]), return_inverse=True)
    v = value(instance, value.masks_from_ints(needed))
    v_without = v[inverse[1 : 1 + len(terms)]]
    v_with = v[inverse[1 + len(terms) :]]
    phi = np.bincount(feats, weights=weights * (v_with - v_without), minlength=d)
    return phi, float(v[inverse[0]])


def _rows(background):
    return background.features if hasattr(background, "features") else np.asarray(background, dtype=float)
