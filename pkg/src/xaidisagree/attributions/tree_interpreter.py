"""Path-based contributions for tree ensembles.

Each edge of a row's root-to-leaf path moves the positive fraction from the
parent's value to the child's; that change is credited to the parent's split
feature. The bias is the root's positive fraction.
"""

from __future__ import annotations

import numpy as np

from ..models.forest import LEAF, DecisionTree, RandomForestModel


def tree_contributions(tree: DecisionTree, rows: np.ndarray, n_features: int) -> tuple[np.ndarray, np.ndarray]:
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    n = rows.shape[0]
    phi = np.zeros((n, n_features))
    node = np.zeros(n, dtype=np.int64)
    active = np.flatnonzero(tree.feature[node] != LEAF)
    while active.size:
        parent = node[active]
        feat = tree.feature[parent]
        go_left = rows[active, feat] <= tree.threshold[parent]
        child = np.where(go_left, tree.left[parent], tree.right[parent])
        np.add.at(phi, (active, feat), tree.value[child] - tree.value[parent])
        node[active] = child
        active = active[tree.feature[child] != LEAF]
    return phi, np.full(n, tree.value[0])


def tree_interpreter(forest: RandomForestModel, rows) -> tuple[np.ndarray, np.ndarray]:
    """Forest-average contributions ``(phi, phi0)``.

    A single row (1-D input) returns a 1-D ``phi`` and scalar ``phi0``.
    """
    if not isinstance(forest, RandomForestModel) or not forest.trees:
        raise TypeError("tree_interpreter needs a trained RandomForestModel")
    single = np.ndim(rows) == 1
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    phi = np.zeros((rows.shape[0], forest.n_features))
    phi0 = np.zeros(rows.shape[0])
    for tree in forest.trees:
        p, b = tree_contributions(tree, rows, forest.n_features)
        phi += p
        phi0 += b
    phi /= len(forest.trees)
    phi0 /= len(forest.trees)
    if single:
        return phi[0], float(phi0[0])
    return phi, phi0
