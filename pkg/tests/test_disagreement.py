import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xaidisagree.data import quantile_bins
from xaidisagree.disagreement import (
    agreement_matrix,
    effect_agreement,
    rank_agreement,
    top_k_feature_agreement,
    weighted_rmsd_agreement,
)
from xaidisagree.results import EffectCurve, ImportanceResult

NAMES = tuple(f"f{i}" for i in range(20))


def ranking(order, method="m", names=NAMES):
    """Ranking whose positions follow ``order`` (unit indices, best first)."""
    order = list(order)
    scores = np.zeros(len(names))
    scores[order] = np.arange(len(order), 0, -1, dtype=float)
    return ImportanceResult.from_rounds(method, names, scores[None, :])


def swapped_blocks(size, d=20):
    """Reverse consecutive blocks of ``2 * size`` halves, moving every unit by ``size``."""
    order = []
    for start in range(0, d, 2 * size):
        block = list(range(start, start + 2 * size))
        order += block[size:] + block[:size]
    return order


IDENTITY = list(range(20))


# ------------------------------------------------------------------- top-k


def test_top_k_examples():
    a = ranking(IDENTITY)
    assert top_k_feature_agreement(a, a) == 1.0
    assert top_k_feature_agreement(a, ranking(IDENTITY[10:] + IDENTITY[:10])) == 0.0
    # swap three of the top ten out for three from the bottom ten
    seven = [0, 1, 2, 3, 4, 5, 6, 17, 18, 19] + [7, 8, 9, 10, 11, 12, 13, 14, 15, 16]
    assert top_k_feature_agreement(a, ranking(seven)) == pytest.approx(0.7)


def test_top_k_clamps_k_and_checks_universe():
    a = ranking(range(3), names=("a", "b", "c"))
    assert top_k_feature_agreement(a, a, k=10) == 1.0
    with pytest.raises(ValueError):
        top_k_feature_agreement(a, ranking(range(3), names=("a", "b", "z")))


# -------------------------------------------------------------------- rank


def test_rank_agreement_examples():
    a = ranking(IDENTITY)
    assert rank_agreement(a, a) == 1.0
    assert rank_agreement(a, ranking(swapped_blocks(1))) == 1.0
    assert rank_agreement(a, ranking(swapped_blocks(2))) == 0.0


def test_rank_agreement_missing_counts_as_disagreement():
    a = ranking(IDENTITY)
    # every feature drops one place, so f9 falls out of b's top ten
    b = ranking([19] + IDENTITY[:19])
    assert rank_agreement(a, b) == pytest.approx(0.9)


def test_rank_agreement_symmetric():
    rng = np.random.default_rng(0)
    a, b = ranking(rng.permutation(20)), ranking(rng.permutation(20))
    assert rank_agreement(a, b, tolerance=3) == rank_agreement(b, a, tolerance=3)


@settings(max_examples=60, deadline=None)
@given(st.permutations(range(20)), st.permutations(range(20)), st.permutations(range(20)), st.integers(1, 20))
def test_ranking_statistics_bounded_and_relabel_invariant(pa, pb, relabel, k):
    a, b = ranking(pa), ranking(pb)
    names = tuple(NAMES[i] for i in relabel)
    ra, rb = ranking(pa, names=names), ranking(pb, names=names)
    for stat in (top_k_feature_agreement, rank_agreement):
        value = stat(a, b, k)
        assert 0.0 <= value <= 1.0
        assert stat(ra, rb, k) == value
        assert stat(a, a, k) == 1.0


# ------------------------------------------------------------------ effects


GRID = quantile_bins(np.linspace(-1, 1, 201), 20)


def curve(j, values, method="m"):
    return EffectCurve(j, GRID.centers, np.asarray(values, dtype=float), method, GRID.counts)


def test_effect_identical_and_offset():
    base = [curve(j, np.sin(GRID.centers * (j + 1))) for j in range(3)]
    grids = [GRID] * 3
    assert effect_agreement(base, base, grids) == 1.0
    shifted = [curve(c.feature_index, c.values + 0.1) for c in base]
    assert effect_agreement(base, shifted, grids) == pytest.approx(0.9)


def test_weighted_rmsd_arithmetic():
    assert weighted_rmsd_agreement([0.1, 0.4], [0.04, 0.01]) == pytest.approx(0.84)
    assert weighted_rmsd_agreement([0.1, 0.3], [0.0, 0.0]) == pytest.approx(0.8)


def test_effect_weights_are_mean_curve_variance():
    x = GRID.centers
    a = [curve(0, 0.2 * x), curve(1, 0.1 * x)]
    b = [curve(0, 0.2 * x + 0.1), curve(1, 0.1 * x + 0.4)]
    w = [np.var(0.2 * x), np.var(0.1 * x)]
    expected = 1 - (w[0] * 0.1 + w[1] * 0.4) / sum(w)
    assert effect_agreement(a, b, [GRID, GRID]) == pytest.approx(expected)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_effect_negation_invariant(seed):
    rng = np.random.default_rng(seed)
    a = [curve(j, rng.normal(size=GRID.n_bins) * 0.1) for j in range(3)]
    b = [curve(j, rng.normal(size=GRID.n_bins) * 0.1) for j in range(3)]
    neg = lambda cs: [curve(c.feature_index, -c.values) for c in cs]
    assert effect_agreement(neg(a), neg(b), [GRID] * 3) == pytest.approx(effect_agreement(a, b, [GRID] * 3), abs=1e-12)


def test_effect_needs_shared_features():
    with pytest.raises(ValueError):
        effect_agreement([curve(0, np.zeros(20))], [curve(1, np.zeros(20))], [GRID, GRID])


# ------------------------------------------------------------------- matrix


def test_matrix_of_identical_rankings_is_ones():
    r = ranking(IDENTITY)
    m = agreement_matrix({"bsp": r, "shap": r}, "top_k")
    np.testing.assert_array_equal(m.values, np.ones((2, 2)))


def test_three_method_matrix_matches_pairwise_calls():
    rng = np.random.default_rng(1)
    results = {mid: ranking(rng.permutation(20), mid) for mid in ("bsp", "sage", "shap")}
    for stat, fn in (("top_k", top_k_feature_agreement), ("rank", rank_agreement)):
        m = agreement_matrix(results, stat)
        assert m.method_ids == ("bsp", "sage", "shap")
        np.testing.assert_array_equal(np.diag(m.values), 1.0)
        np.testing.assert_array_equal(m.values, m.values.T)
        assert m.values[0, 1] == fn(results["bsp"], results["sage"])
        assert m.values[1, 2] == fn(results["sage"], results["shap"])
        cross = np.mean([m.values[0, 2], m.values[1, 2]])
        assert m.summary["mean_importance_vs_relevance"] == pytest.approx(cross)
        assert m.summary["mean_off_diagonal"] == pytest.approx(np.mean([m.values[0, 1], m.values[0, 2], m.values[1, 2]]))


def test_effect_matrix_and_clamp_flag():
    x = GRID.centers
    sets = {"pd": [curve(0, 0.1 * x)], "ale": [curve(0, 0.1 * x + 1.5)]}
    m = agreement_matrix(sets, "effect", grids={0: GRID})
    assert m.values[0, 1] == pytest.approx(-0.5)
    assert m.clamped
    with pytest.raises(ValueError):
        agreement_matrix(sets, "effect")


def test_matrix_errors_and_category_override():
    r = ranking(IDENTITY, "bsp")
    with pytest.raises(ValueError):
        agreement_matrix({"bsp": r}, "top_k")
    with pytest.raises(ValueError):
        agreement_matrix({"bsp": r, "x": r}, "spearman")
    m = agreement_matrix({"bsp": r, "x": r}, "top_k", method_category={"bsp": "relevance"})
    assert m.summary["mean_importance_vs_relevance"] is None
    assert m.to_dict()["summary"]["mean_importance_vs_relevance"] is None
    assert len(m.csv_rows()) == 4
