"""Permutation importance: backward/forward, single-pass/multipass, grouped."""

from __future__ import annotations

from typing import Callable, Iterable

import numpy as np

from ._random import parallel_map, substream
from .data import FeatureGroups, TabularDataset
from .metrics import NaupdcScorer
from .models import predict_proba
from .results import ImportanceResult, rank_descending

Scorer = Callable[[np.ndarray], float]

METHOD_IDS = {
    ("backward", "single"): "bsp",
    ("forward", "single"): "fsp",
    ("backward", "multi"): "bmp",
    ("forward", "multi"): "fmp",
}


def joint_permutation(seed: int, round_index: int, members: Iterable[int], n: int) -> np.ndarray:
    """Row shuffle shared by every feature in ``members`` for one round.

    The stream is keyed by the sorted member set, so the same set always gets
    the same shuffle regardless of which method asks for it.
    """
    key = sorted(int(m) for m in members)
    return substream(seed, "permute", round_index, *key).permutation(n)


class _Permuter:
    """Scores the model with chosen columns shuffled."""

    def __init__(self, model, data: TabularDataset, seed: int, scorer: Scorer):
        self.model = model
        self.X = data.features
        self.n, self.d = self.X.shape
        self.seed = seed
        self.scorer = scorer
        self._single: dict[tuple[int, int], np.ndarray] = {}

    def single_perm(self, r: int, j: int) -> np.ndarray:
        key = (r, j)
        perm = self._single.get(key)
        if perm is None:
            perm = joint_permutation(self.seed, r, (j,), self.n)
            self._single[key] = perm
        return perm

    def warm(self, n_rounds: int) -> None:
        for r in range(n_rounds):
            for j in range(self.d):
                self.single_perm(r, j)

    def score(self, X: np.ndarray) -> float:
        return float(self.scorer(predict_proba(self.model, X)))

    def independent(self, r: int, columns: Iterable[int]) -> float:
        """Each listed column gets its own shuffle."""
        X = self.X.copy()
        for j in columns:
            X[:, j] = self.X[self.single_perm(r, j), j]
        return self.score(X)

    def joint(self, r: int, columns: Iterable[int]) -> float:
        """All listed columns share one shuffle."""
        columns = sorted(columns)
        if not columns:
            return self.score(self.X)
        X = self.X.copy()
        perm = joint_permutation(self.seed, r, columns, self.n)
        X[:, columns] = self.X[perm][:, columns]
        return self.score(X)


def _names(data: TabularDataset) -> tuple[str, ...]:
    return data.feature_names


def permutation_importance(
    model,
    data: TabularDataset,
    direction: str = "backward",
    mode: str = "single",
    n_rounds: int = 30,
    top_k: int = 10,
    seed: int = 0,
    scorer: Scorer | None = None,
    n_jobs: int = 1,
) -> ImportanceResult:
    """Permutation importance in one of four flavours.

    Backward scores measure the drop from the intact model when features are
    shuffled; forward scores measure the gain over the fully shuffled model
    when features are restored. Multipass runs greedily fix each winner
    (left shuffled for backward, left restored for forward) and re-evaluate
    the rest, for at most ``top_k`` steps.
    """
    if direction not in ("backward", "forward"):
        raise ValueError(f"unknown direction {direction!r}")
    if mode not in ("single", "multi"):
        raise ValueError(f"unknown mode {mode!r}")
    if n_rounds < 1:
        raise ValueError("n_rounds must be >= 1")
    scorer = scorer or NaupdcScorer(data.targets)
    d = data.n_features
    top_k = max(1, min(top_k, d))
    perm = _Permuter(model, data, seed, scorer)
    perm.warm(n_rounds)
    baseline = perm.score(data.features)
    all_features = list(range(d))
    rounds = range(n_rounds)

    all_permuted = None
    if direction == "forward":
        all_permuted = np.array(parallel_map(lambda r: perm.independent(r, all_features), rounds, n_jobs))

    def step_scores(fixed: list[int], candidates: list[int]) -> np.ndarray:
        """(n_rounds x len(candidates)) scores with ``fixed`` held in place."""
        tasks = [(r, c) for r in rounds for c in candidates]
        if direction == "backward":
            vals = parallel_map(lambda t: baseline - perm.independent(t[0], fixed + [t[1]]), tasks, n_jobs)
        else:
            def forward(t):
                keep = set(fixed) | {t[1]}
                return perm.independent(t[0], [j for j in all_features if j not in keep]) - all_permuted[t[0]]

            vals = parallel_map(forward, tasks, n_jobs)
        return np.array(vals, dtype=float).reshape(n_rounds, len(candidates))

    method_id = METHOD_IDS[(direction, mode)]
    common = dict(baseline_score=baseline, direction=direction)
    if direction == "forward":
        common["extras"] = {"all_permuted_scores": all_permuted.tolist()}

    if mode == "single":
        per_round = step_scores([], all_features)
        return ImportanceResult.from_rounds(method_id, _names(data), per_round, mode="single", **common)

    per_round = np.zeros((n_rounds, d))
    fixed: list[int] = []
    remaining = list(all_features)
    last = None
    for _ in range(top_k):
        block = step_scores(fixed, remaining)
        means = block.mean(axis=0)
        winner_pos = int(rank_descending(means)[0])
        for pos, c in enumerate(remaining):
            per_round[:, c] = block[:, pos]
        last = (list(remaining), means)
        fixed.append(remaining.pop(winner_pos))

    # units never selected keep their scores from the final completed step
    leftover_order = []
    if remaining:
        cands, means = last
        lookup = {c: means[i] for i, c in enumerate(cands)}
        leftover_order = sorted(remaining, key=lambda c: (-lookup[c], c))
    rank = np.array(fixed + leftover_order, dtype=np.int64)
    extras = dict(common.pop("extras", {}))
    extras["selected"] = [data.feature_names[j] for j in fixed]
    extras["not_individually_selected"] = [data.feature_names[j] for j in leftover_order]
    return ImportanceResult.from_rounds(
        method_id, _names(data), per_round, rank=rank, mode="multi", extras=extras, **common
    )


def grouped_permutation_importance(
    model,
    data: TabularDataset,
    groups: FeatureGroups,
    variant: str = "grouped",
    n_rounds: int = 30,
    seed: int = 0,
    scorer: Scorer | None = None,
    n_jobs: int = 1,
) -> ImportanceResult:
    """Joint-shuffle importance of feature groups.

    ``grouped`` shuffles the group together (one shared row shuffle) and
    reports the drop from the intact model. ``grouped_only`` shuffles
    everything outside the group together and reports the gain over the fully
    shuffled model. ``extras["permuted_scores"]`` keeps the raw per-round
    scores of the shuffled model.
    """
    if variant not in ("grouped", "grouped_only"):
        raise ValueError(f"unknown variant {variant!r}")
    if n_rounds < 1:
        raise ValueError("n_rounds must be >= 1")
    groups.validate(data.n_features)
    scorer = scorer or NaupdcScorer(data.targets)
    perm = _Permuter(model, data, seed, scorer)
    d = data.n_features
    baseline = perm.score(data.features)
    members = groups.members()
    if variant == "grouped":
        shuffled_sets = [list(m) for m in members]
    else:
        shuffled_sets = [[j for j in range(d) if j not in set(m)] for m in members]

    tasks = [(r, u) for r in range(n_rounds) for u in range(len(members))]
    raw = parallel_map(lambda t: perm.joint(t[0], shuffled_sets[t[1]]), tasks, n_jobs)
    raw = np.array(raw, dtype=float).reshape(n_rounds, len(members))

    extras = {"permuted_scores": raw.tolist()}
    if variant == "grouped":
        per_round = baseline - raw
    else:
        perm.warm(n_rounds)
        all_permuted = np.array(
            parallel_map(lambda r: perm.independent(r, range(d)), range(n_rounds), n_jobs), dtype=float
        )
        per_round = raw - all_permuted[:, None]
        extras["all_permuted_scores"] = all_permuted.tolist()
    return ImportanceResult.from_rounds(
        variant,
        tuple(groups.names),
        per_round,
        baseline_score=baseline,
        direction="backward" if variant == "grouped" else "forward",
        mode=variant,
        unit_members=tuple(members),
        extras=extras,
    )
