"""Acceptance criteria AC1-AC11 at their stated tolerances.

Each test logs one PASS/FAIL line, collected in the terminal summary.
"""

import time

import numpy as np
from scipy.special import expit

from xaidisagree._random import substream
from xaidisagree.attributions import PartitionTree, exact_shapley, global_relevance, explain_rows, owen_values
from xaidisagree.attributions import log_loss, sage_values, tree_interpreter
from xaidisagree.data import FeatureGroups, TabularDataset, quantile_bins
from xaidisagree.disagreement import (
    agreement_matrix,
    effect_agreement,
    rank_agreement,
    top_k_feature_agreement,
    weighted_rmsd_agreement,
)
from xaidisagree.effects import ale_first_order, ale_variance_ranking, partial_dependence
from xaidisagree.importance import grouped_permutation_importance, permutation_importance
from xaidisagree.metrics import naupdc
from xaidisagree.models import LogisticRegressionModel, coefficient_relevance, train_logistic, train_random_forest
from xaidisagree.pipeline import RunConfig, report_json, run_pipeline
from xaidisagree.results import EffectCurve, ImportanceResult
from xaidisagree.synthetic import logistic_dataset


class _Fn:
    def __init__(self, fn, d):
        self.fn, self.n_features = fn, d

    def predict_proba(self, X):
        return self.fn(X)


def test_ac1_additivity(acceptance_log):
    start = time.perf_counter()
    rng = np.random.default_rng(1)
    data = logistic_dataset(rng.normal(size=8), n=2000, rho=0.3, seed=1)
    logistic = LogisticRegressionModel.from_coefficients(rng.normal(size=8), -0.5)
    forest = train_random_forest(data, n_trees=25, max_depth=6, seed=1)
    partition = PartitionTree.from_correlation(np.corrcoef(data.features.T))
    rows = rng.choice(data.n_examples, size=200, replace=False)
    background = data.features[rng.choice(data.n_examples, size=20, replace=False)]
    worst = {}
    for label, model in (("logistic", logistic), ("forest", forest)):
        target = model.predict_proba(data.features[rows])
        for method in ("shap", "owen"):
            attr = explain_rows(method, model, data, rows, background=background, partition=partition)
            worst[f"{method}/{label}"] = np.max(np.abs(attr.reconstruction() - target))
    phi, phi0 = tree_interpreter(forest, data.features[rows])
    worst["ti/forest"] = np.max(np.abs(phi0 + phi.sum(axis=1) - forest.predict_proba(data.features[rows])))
    elapsed = time.perf_counter() - start
    ok = max(worst.values()) <= 1e-9 and elapsed < 60
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    assert acceptance_log("AC1", ok, f"max |phi0 + sum(phi) - f(x)|: {detail}; {elapsed:.1f}s")


def test_ac2_shapley_axioms(acceptance_log):
    gaps = {"symmetry": 0.0, "missingness": 0.0, "efficiency": 0.0, "owen_flat": 0.0}
    for trial in range(10):
        rng = np.random.default_rng(100 + trial)
        d = int(rng.integers(3, 9))
        w = rng.normal(size=d)
        w[1] = w[0]
        w[-1] = 0.0
        # symmetric in features 0 and 1, never reads feature d-1
        model = _Fn(lambda X, w=w: expit(X @ w + 0.5 * X[:, 0] * X[:, 1]), d)
        bg = rng.normal(size=(16, d))
        bg[:, 1] = bg[:, 0]
        x = rng.normal(size=d)
        x[1] = x[0]
        phi, phi0 = exact_shapley(model, x, bg)
        owen, _ = owen_values(model, x, bg, PartitionTree.flat(d))
        gaps["symmetry"] = max(gaps["symmetry"], abs(phi[0] - phi[1]))
        gaps["missingness"] = max(gaps["missingness"], abs(phi[-1]))
        gaps["efficiency"] = max(gaps["efficiency"], abs(phi0 + phi.sum() - model.predict_proba(x[None])[0]))
        gaps["owen_flat"] = max(gaps["owen_flat"], np.max(np.abs(owen - phi)))
    ok = max(gaps.values()) <= 1e-9
    assert acceptance_log("AC2", ok, ", ".join(f"{k} {v:.1e}" for k, v in gaps.items()))


def test_ac3_multipass_first_step(acceptance_log):
    matches = 0
    for trial in range(20):
        rng = substream(trial, "ac3")
        beta = rng.normal(size=6)
        data = logistic_dataset(beta, n=1500, rho=float(rng.uniform(0, 0.8)), seed=trial)
        model = train_logistic(data)
        single = permutation_importance(model, data, "backward", "single", n_rounds=5, seed=trial)
        multi = permutation_importance(model, data, "backward", "multi", n_rounds=5, seed=trial, top_k=1)
        matches += int(single.rank[0] == multi.rank[0])
    assert acceptance_log("AC3", matches == 20, f"top-1 agreement on {matches}/20 datasets")


def test_ac4_independence_concordance(acceptance_log):
    beta = np.array([2.0, 1.5, 1.0, 0.5, 0.0])
    identical, min_rank, min_topk = 0, 1.0, 1.0
    for trial in range(40):
        data = logistic_dataset(beta, n=5000, seed=trial)
        model = train_logistic(data)
        rankings = {
            "bsp": permutation_importance(model, data, n_rounds=10, seed=trial),
            "coef": coefficient_relevance(model, feature_names=data.feature_names),
            "shap": global_relevance(
                explain_rows(
                    "shap",
                    model,
                    data,
                    substream(trial, "ac4").choice(5000, size=1000, replace=False),
                    background=data.features[:100],
                )
            ),
            "ale_var": ale_variance_ranking(
                [ale_first_order(model, data, j, quantile_bins(data.features[:, j], 30)) for j in range(5)]
            ),
        }
        orders = {tuple(r.rank.tolist()) for r in rankings.values()}
        identical += int(len(orders) == 1)
        top = agreement_matrix(rankings, "top_k", k=5)
        rank = agreement_matrix(rankings, "rank", k=5)
        off = ~np.eye(4, dtype=bool)
        min_topk = min(min_topk, top.values[off].min())
        min_rank = min(min_rank, rank.values[off].min())
    ok = identical >= 38 and min_topk == 1.0 and min_rank >= 0.8
    detail = f"identical order in {identical}/40 trials, min top-5 {min_topk:.2f}, min rank agreement {min_rank:.2f}"
    assert acceptance_log("AC4", ok, detail)


def _ac5_trial(seed, rho=0.95, n=5000):
    rng = substream(seed, "ac5")
    s2 = 1.0 / rho - 1.0
    z = rng.standard_normal(n)
    x1 = z + np.sqrt(s2) * rng.standard_normal(n)
    copy = z + np.sqrt(s2) * rng.standard_normal(n)
    others = rng.standard_normal((n, 3))
    y = (rng.random(n) < expit(-1.0 + 1.5 * z + others @ np.array([1.0, -0.7, 0.5]))).astype(int)
    Xi = np.column_stack([others[:, 0], x1, others[:, 1], others[:, 2]])
    Xc = np.column_stack([Xi, copy])
    indep = TabularDataset(Xi, ("o0", "x1", "o1", "o2"), y)
    corr = TabularDataset(Xc, ("o0", "x1", "o1", "o2", "copy"), y)
    si = permutation_importance(train_logistic(indep), indep, n_rounds=10, seed=seed).scores[1]
    model_c = train_logistic(corr)
    sc = permutation_importance(model_c, corr, n_rounds=10, seed=seed).scores[1]
    groups = FeatureGroups({"pair": (1, 4), "o0": (0,), "o1": (2,), "o2": (3,)})
    sg = grouped_permutation_importance(model_c, corr, groups, "grouped", n_rounds=10, seed=seed).scores[0]
    return 1.0 - sc / si, sg / si


def test_ac5_correlation_disagreement(acceptance_log):
    results = np.array([_ac5_trial(seed) for seed in range(20)])
    reduction, recovery = np.median(results, axis=0)
    ok = reduction >= 0.30 and recovery >= 0.90
    detail = f"median single-pass reduction {reduction:.2f} (need >= 0.30), median grouped recovery {recovery:.2f} (need >= 0.90)"
    assert acceptance_log("AC5", ok, detail)


def test_ac6_grouped_duality(acceptance_log):
    rng = np.random.default_rng(6)
    beta = np.array([1.0, -0.8, 0.6, 0.4, -0.3, 0.2])
    data = logistic_dataset(beta, n=3000, seed=6)
    model = LogisticRegressionModel.from_coefficients(beta, -1.0)
    shared_eval, same_rank, literal, max_gap = 0, 0, 0, 0.0
    for trial in range(10):
        mask = rng.random(6) < 0.5
        mask[trial % 6] = True
        mask[(trial + 1) % 6] = False
        groups = FeatureGroups({"g1": tuple(np.flatnonzero(mask)), "g2": tuple(np.flatnonzero(~mask))})
        g = grouped_permutation_importance(model, data, groups, "grouped", n_rounds=5, seed=trial)
        o = grouped_permutation_importance(model, data, groups, "grouped_only", n_rounds=5, seed=trial)
        # shuffling G1 is the evaluation behind both grouped(G1) and grouped_only(G2)
        shared_eval += int(np.array_equal(np.array(g.extras["permuted_scores"])[:, 0], np.array(o.extras["permuted_scores"])[:, 1]))
        same_rank += int(g.rank.tolist() == o.rank.tolist())
        literal += int(np.array_equal(g.per_round_scores[:, 0], o.per_round_scores[:, 1]))
        max_gap = max(max_gap, float(np.max(np.abs(g.per_round_scores[:, 0] - o.per_round_scores[:, 1]))))
    detail = (
        f"shared permuted evaluation {shared_eval}/10, identical rankings {same_rank}/10, "
        f"literal score equality grouped(G1) == grouped_only(G2) {literal}/10 (max gap {max_gap:.3f})"
    )
    acceptance_log("AC6", literal == 10, detail)
    assert shared_eval == 10 and same_rank == 10
    assert literal == 10, "grouped(G1) = baseline - P and grouped_only(G2) = P - all-permuted differ unless P is their midpoint"


def test_ac7_pd_ale(acceptance_log):
    beta = np.array([0.6, -0.5, 0.4])
    indep_worst, corr_best = 0.0, np.inf
    for seed in range(10):
        model = LogisticRegressionModel.from_coefficients(beta, -1.0)
        gaps = {}
        for rho in (0.0, 0.9):
            data = logistic_dataset(beta, n=5000, intercept=-1.0, rho=rho, seed=seed)
            per_feature = []
            for j in range(3):
                grid = quantile_bins(data.features[:, j], 30)
                pd = partial_dependence(model, data, j, grid)
                ale = ale_first_order(model, data, j, grid)
                per_feature.append(np.max(np.abs(pd.interpolate(ale.grid) - ale.values)))
            gaps[rho] = max(per_feature)
        indep_worst = max(indep_worst, gaps[0.0])
        corr_best = min(corr_best, gaps[0.9])
    ok = indep_worst < 0.02 and corr_best > 0.02
    detail = f"independent max |PD - ALE| {indep_worst:.4f} (< 0.02), correlated worst-feature gap >= {corr_best:.3f} (> 0.02), 10 seeds"
    assert acceptance_log("AC7", ok, detail)


def test_ac8_naupdc_anchors(acceptance_log):
    rng = np.random.default_rng(8)
    labels = (rng.random(10_000) < 0.25).astype(int)
    perfect = naupdc(labels.astype(float), labels)
    independent = naupdc(rng.random(10_000), labels)
    invariant = True
    for seed in range(20):
        r = np.random.default_rng(seed)
        cells = r.integers(0, 199, 2000)
        frac = r.uniform(0.05, 0.95, 2000)
        probs = (cells + frac) / 199.0
        y = (r.random(2000) < probs).astype(int)
        for warp in (np.sqrt(frac), frac**3):
            invariant &= naupdc((cells + warp) / 199.0, y) == naupdc(probs, y)
    ok = abs(perfect - 1) <= 1e-6 and abs(independent) <= 0.05 and invariant
    detail = f"perfect {perfect:.8f}, label-independent {independent:+.4f}, monotone invariance exact: {invariant}"
    assert acceptance_log("AC8", ok, detail)


def test_ac9_sage_efficiency(acceptance_log):
    start = time.perf_counter()
    beta = np.array([1.2, -0.9, 0.7, 0.5, -0.3, 0.0])
    model = LogisticRegressionModel.from_coefficients(beta, -0.8)
    ratios, zeros = [], []
    for seed in range(3):
        data = logistic_dataset(beta, n=2000, intercept=-0.8, seed=seed)
        y = data.targets.astype(float)
        r = sage_values(model, data, seed=seed, n_outer_samples=100_000)
        gap = log_loss(y, np.full(y.size, y.mean())).mean() - log_loss(y, model.predict_proba(data.features)).mean()
        ratios.append(r.scores.sum() / gap)
        zeros.append(abs(r.scores[5]))
    elapsed = time.perf_counter() - start
    ok = all(abs(q - 1) <= 0.05 for q in ratios) and max(zeros) <= 0.005 and elapsed < 300
    detail = f"sum/gap {', '.join(f'{q:.3f}' for q in ratios)}, max |zero-coef SAGE| {max(zeros):.1e}, {elapsed:.0f}s"
    assert acceptance_log("AC9", ok, detail)


def _ranking(order, names):
    scores = np.zeros(len(names))
    scores[list(order)] = np.arange(len(order), 0, -1, dtype=float)
    return ImportanceResult.from_rounds("m", names, scores[None, :])


def test_ac10_disagreement_arithmetic(acceptance_log):
    names = tuple(f"f{i}" for i in range(20))
    ident = list(range(20))
    a = _ranking(ident, names)
    seven = _ranking([0, 1, 2, 3, 4, 5, 6, 17, 18, 19] + list(range(7, 17)), names)
    disjoint = _ranking(ident[10:] + ident[:10], names)
    shift1 = _ranking([i ^ 1 for i in ident], names)
    shift2 = _ranking([i + 2 if i % 4 < 2 else i - 2 for i in ident], names)
    grid = quantile_bins(np.linspace(-1, 1, 201), 20)
    curves = [EffectCurve(j, grid.centers, np.sin(grid.centers * (j + 1)), "a", grid.counts) for j in range(3)]
    offset = [EffectCurve(c.feature_index, c.grid, c.values + 0.1, "b", c.bin_counts) for c in curves]
    checks = [
        top_k_feature_agreement(a, a) == 1.0,
        top_k_feature_agreement(a, disjoint) == 0.0,
        top_k_feature_agreement(a, seven) == 0.7,
        rank_agreement(a, a) == 1.0,
        rank_agreement(a, shift1) == 1.0,
        rank_agreement(a, shift2) == 0.0,
        effect_agreement(curves, curves, [grid] * 3) == 1.0,
        abs(effect_agreement(curves, offset, [grid] * 3) - 0.9) < 1e-12,
        abs(weighted_rmsd_agreement([0.1, 0.4], [0.04, 0.01]) - 0.84) < 1e-12,
    ]
    cfg = {
        "data_path": "builtin:synthetic?n=1000&d=8",
        "target_column": "target",
        "seed": 10,
        "model": {"kind": "logistic"},
        "methods": ["coef", "bsp", "fsp", "ale", "shap"],
        "n_rounds": 5,
        "sample_cap": 100,
        "background_size": 30,
    }
    report = run_pipeline(RunConfig.from_dict(cfg))
    structural = True
    for m in report.agreement:
        structural &= np.array_equal(m.values, m.values.T) and np.all(np.diag(m.values) == 1.0)
    ranking_methods = len(report.agreement[0].method_ids)
    ok = all(checks) and structural and ranking_methods == 5
    detail = f"{sum(checks)}/{len(checks)} examples exact, {len(report.agreement)} matrices over {ranking_methods} methods symmetric with unit diagonal: {structural}"
    assert acceptance_log("AC10", ok, detail)


def test_ac11_end_to_end_determinism(acceptance_log):
    cfg = {
        "data_path": "builtin:synthetic",
        "target_column": "target",
        "seed": 11,
        "model": {"kind": "random_forest", "n_trees": 30},
        "sample_cap": 100,
        "background_size": 50,
    }
    texts, times = [], []
    for jobs in (1, 8):
        start = time.perf_counter()
        texts.append(report_json(run_pipeline(RunConfig.from_dict(cfg), n_jobs=jobs)))
        times.append(time.perf_counter() - start)
    ok = texts[0] == texts[1] and max(times) < 600
    detail = f"report.json identical across workers 1 and 8: {texts[0] == texts[1]}, runtimes {times[0]:.0f}s / {times[1]:.0f}s"
    assert acceptance_log("AC11", ok, detail)
