"""Retrieval metrics and the automated experiment harness."""

import json

import numpy as np
import pytest

from specbir.cube import CorpusLabels
from specbir.evaluation import (
    anr,
    normalized_rank,
    pr_curve,
    precision_recall,
    reports_to_csv,
    reports_to_json,
    run_experiment,
)
from specbir.rf import DissimilarityIndex, RfConfig


def planted_index(rng, sizes, within=(0.0, 0.3), across=(0.7, 1.0)):
    n = sum(sizes)
    bounds = np.cumsum((0,) + tuple(sizes))
    category = np.zeros(n, dtype=int)
    for c in range(len(sizes)):
        category[bounds[c]:bounds[c + 1]] = c + 1
    M = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            lo, hi = within if category[i] == category[j] else across
            M[i, j] = M[j, i] = rng.uniform(lo, hi)
    index = DissimilarityIndex(list(range(1, n + 1)), M, "spectral")
    labels = CorpusLabels({i + 1: int(category[i]) for i in range(n)})
    return index, labels


class RandomScoreStub:
    """Classifier stand-in emitting fresh random scores every call."""

    def __init__(self, rng):
        self.rng = rng

    def fit(self, X, y):
        return self

    def predict_proba(self, X):
        scores = self.rng.random(len(X))
        return np.column_stack([1 - scores, scores])


class TestPrecisionRecall:
    def test_perfect_prefix(self):
        ranking = [1, 2, 3, 4, 5]
        p, r = precision_recall(ranking, {1, 2}, 2)
        assert (p, r) == (1.0, 1.0)

    def test_direct_formula(self):
        ranking = list(range(1, 41))
        relevant = set(range(1, 6)) | set(range(30, 45))
        p, r = precision_recall(ranking, relevant, 10)
        assert p == 5 / 10
        assert r == 5 / len(relevant)

    def test_full_scope(self):
        ranking = list(range(1, 11))
        relevant = {2, 5, 7}
        p, r = precision_recall(ranking, relevant, 10)
        assert p == pytest.approx(0.3)
        assert r == 1.0

    def test_empty_relevant_rejected(self):
        with pytest.raises(ValueError):
            precision_recall([1, 2], set(), 1)

    def test_curve_monotonicity_and_integrality(self):
        rng = np.random.default_rng(0)
        ranking = list(rng.permutation(30) + 1)
        relevant = set(rng.choice(range(1, 31), size=8, replace=False).tolist())
        p, r = pr_curve(ranking, relevant)
        assert (np.diff(r) >= -1e-12).all()
        scopes = np.arange(1, 31)
        hits_from_p = p * scopes
        hits_from_r = r * len(relevant)
        np.testing.assert_allclose(hits_from_p, np.round(hits_from_p), atol=1e-9)
        np.testing.assert_allclose(hits_from_p, hits_from_r, atol=1e-9)


class TestNormalizedRank:
    def test_perfect_is_zero(self):
        ranking = list(range(1, 11))
        assert normalized_rank(ranking, {1, 2, 3}) == 0.0

    def test_hand_example(self):
        ranking = list(range(1, 11))
        # Relevant at zero-based positions 0 and 5.
        assert normalized_rank(ranking, {1, 6}) == pytest.approx(0.2)

    def test_worst_case_closed_form(self):
        n, n_rel = 12, 4
        ranking = list(range(1, n + 1))
        relevant = set(ranking[-n_rel:])
        assert normalized_rank(ranking, relevant) == pytest.approx((n - n_rel) / n)

    def test_invariant_to_shuffling_non_relevant(self):
        rng = np.random.default_rng(1)
        ranking = list(range(1, 21))
        relevant = {3, 9, 15}
        base = normalized_rank(ranking, relevant)
        positions = [i for i, pid in enumerate(ranking) if pid not in relevant]
        others = [pid for pid in ranking if pid not in relevant]
        for _ in range(5):
            rng.shuffle(others)
            shuffled = list(ranking)
            for pos, pid in zip(positions, others):
                shuffled[pos] = pid
            assert normalized_rank(shuffled, relevant) == base

    def test_random_permutation_expectation(self):
        rng = np.random.default_rng(2)
        n, n_rel, trials = 100, 10, 2000
        ranking = np.arange(1, n + 1)
        relevant = set(range(1, n_rel + 1))
        values = []
        for _ in range(trials):
            values.append(normalized_rank(list(rng.permutation(ranking)), relevant))
        expected = (n - n_rel) / (2 * n)
        assert np.mean(values) == pytest.approx(expected, abs=0.01)

    def test_anr_basics(self):
        assert anr([0.0, 0.0]) == 0.0
        assert anr([0.2, 0.4]) == pytest.approx(0.3)
        assert anr([0.37]) == 0.37
        with pytest.raises(ValueError):
            anr([])


class TestRunExperiment:
    def test_separable_corpus_reaches_zero_anr(self):
        rng = np.random.default_rng(3)
        index, labels = planted_index(rng, (8, 8, 8))
        config = RfConfig(classifier="knn", prototype_policy="online",
                          criterion="AL", scope=4, t_max=5, k=7)
        report = run_experiment(index, labels, config)
        for cat, value in report.anr_final_by_category.items():
            assert value == pytest.approx(0.0, abs=1e-12), cat

    def test_random_stub_squares_with_uniform_expectation(self):
        rng = np.random.default_rng(4)
        # 30 categories x 4 patches: N_rel/N is small, so the uniform
        # expectation (N - N_rel) / (2N) is close to one half.
        index, labels = planted_index(rng, (4,) * 30)
        config = RfConfig(classifier="knn", criterion="BW", scope=4, t_max=2)
        stub_rng = np.random.default_rng(5)
        report = run_experiment(
            index, labels, config,
            classifier_factory=lambda: RandomScoreStub(stub_rng),
        )
        n, n_rel = 120, 4
        expected = (n - n_rel) / (2 * n)
        assert report.anr_final == pytest.approx(expected, abs=0.05)

    def test_report_shape_contract(self):
        rng = np.random.default_rng(6)
        index, labels = planted_index(rng, (5, 5))
        config = RfConfig(classifier="knn", criterion="BW", scope=4, t_max=3)
        report = run_experiment(index, labels, config)
        assert len(report.pr_curves) == config.t_max + 1
        for curve in report.pr_curves:
            assert len(curve["precision"]) == len(index)
            assert len(curve["recall"]) == len(index)
        for cat in labels.categories():
            assert len(report.trajectories[cat]["relevant"]) == config.t_max + 1

    def test_singleton_category_skipped_and_reported(self):
        rng = np.random.default_rng(7)
        index, labels = planted_index(rng, (6, 6))
        labels.by_patch[1] = 99  # category with a single member
        config = RfConfig(classifier="knn", criterion="BW", scope=4, t_max=2)
        report = run_experiment(index, labels, config)
        assert report.skipped_queries == [1]
        assert 99 not in report.anr_final_by_category

    def test_csv_and_json_emission(self):
        rng = np.random.default_rng(8)
        index, labels = planted_index(rng, (5, 5))
        config = RfConfig(classifier="knn", criterion="BW", scope=4, t_max=2)
        report = run_experiment(index, labels, config)
        csv_text = reports_to_csv([report])
        lines = csv_text.strip().splitlines()
        assert lines[0] == "category,prototype_policy,classifier,criterion,spectral"
        assert any("zero-query" in line for line in lines[1:])
        parsed = json.loads(reports_to_json([report]))
        assert parsed[0]["config"]["kind"] == "spectral"
        assert "anr_final_by_category" in parsed[0]
