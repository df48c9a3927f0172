import itertools
import random

import pytest

from callfuse.stats import (
    ConfusionMatrix,
    ModelResult,
    StatTestResult,
    best_by_algorithm,
    classification_metrics,
    compare_feature_sets,
    emit_report,
    rank_models,
    wilcoxon_signed_rank,
)


class TestClassificationMetrics:
    def test_perfect_classifier(self):
        scores = classification_metrics(ConfusionMatrix(tp=5, fp=0, tn=5, fn=0))
        assert scores == (1.0, 1.0, 1.0, 1.0, 1.0)

    def test_zero_denominator_conventions(self):
        scores = classification_metrics(ConfusionMatrix(tp=0, fp=0, tn=4, fn=3))
        assert scores.precision == 0.0
        assert scores.f_measure == 0.0
        assert scores.mcc == 0.0

    def test_accuracy_recomputable_from_matrix(self):
        m = ConfusionMatrix(tp=7, fp=2, tn=11, fn=3)
        assert classification_metrics(m).accuracy == (7 + 11) / 23

    def test_f_measure_is_harmonic_mean(self):
        rng = random.Random(5)
        for _ in range(50):
            m = ConfusionMatrix(
                tp=rng.randint(0, 20), fp=rng.randint(0, 20),
                tn=rng.randint(0, 20), fn=rng.randint(0, 20),
            )
            if m.total() == 0:
                continue
            s = classification_metrics(m)
            assert min(s.precision, s.recall) - 1e-12 <= s.f_measure <= max(s.precision, s.recall) + 1e-12
            assert s.f_measure <= 2 * min(s.precision, s.recall) + 1e-12

    def test_empty_matrix_rejected(self):
        with pytest.raises(ValueError):
            classification_metrics(ConfusionMatrix(0, 0, 0, 0))


def result(config_id, algorithm="knn", variant="s", recall=0.5, f_measure=0.5):
    # fabricate a result with the wanted ordering scores
    return ModelResult(
        config_id=config_id,
        algorithm=algorithm,
        variant=variant,
        matrix=ConfusionMatrix(1, 1, 1, 1),
        accuracy=0.5,
        precision=0.5,
        recall=recall,
        f_measure=f_measure,
        mcc=0.0,
    )


class TestRankModels:
    def test_descending_by_score(self):
        results = [result(1, recall=0.3), result(2, recall=0.9), result(3, recall=0.6)]
        top = rank_models(results, "recall", 3)
        assert [r.config_id for r in top] == [2, 3, 1]

    def test_top_k_larger_than_list(self):
        results = [result(1), result(2)]
        assert len(rank_models(results, "recall", 10)) == 2

    def test_matches_full_sort_oracle_on_synthetic_108(self):
        rng = random.Random(9)
        results = [
            result(i % 36 + 1, variant=v, recall=rng.random(), f_measure=rng.random())
            for i, v in zip(range(108), itertools.cycle(["s", "h", "s+h"]))
        ]
        top = rank_models(results, "recall", 10)
        oracle = sorted(results, key=lambda r: (-r.recall, -r.f_measure, r.config_id))[:10]
        assert top == oracle

    def test_ranking_does_not_mutate_input(self):
        results = [result(1, recall=0.1), result(2, recall=0.9)]
        snapshot = list(results)
        rank_models(results, "recall", 1)
        assert results == snapshot

    def test_unknown_score_rejected(self):
        with pytest.raises(ValueError, match="unknown score"):
            rank_models([result(1)], "awesomeness", 3)


def midranks_oracle(values):
    return [
        sum(1 for v in values if v < x) + (sum(1 for v in values if v == x) + 1) / 2.0
        for x in values
    ]


def enumeration_oracle(x, y):
    """Literal 2^n sign enumeration of min(W+, W-)."""
    diffs = [a - b for a, b in zip(x, y)]
    nonzero = [d for d in diffs if d != 0.0]
    n = len(nonzero)
    if n == 0:
        return 0.0, 1.0
    ranks = midranks_oracle([abs(d) for d in nonzero])
    total = sum(ranks)
    w_plus = sum(r for d, r in zip(nonzero, ranks) if d > 0)
    t_obs = min(w_plus, total - w_plus)
    count = 0
    for signs in itertools.product((1.0, -1.0), repeat=n):
        wp = sum(r for s, r in zip(signs, ranks) if s > 0)
        if min(wp, total - wp) <= t_obs + 1e-12:
            count += 1
    return t_obs, count / 2.0**n


class TestWilcoxon:
    def test_all_positive_three(self):
        got = wilcoxon_signed_rank([2, 3, 4], [1, 1, 1])
        assert got.T == 0.0
        assert got.p_value == pytest.approx(0.25, abs=1e-12)
        assert got.method == "exact"
        assert got.n_effective == 3

    def test_all_zero_differences(self):
        got = wilcoxon_signed_rank([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert got == StatTestResult(T=0.0, p_value=1.0, n_effective=0, method="exact")

    def test_textbook_ten_pairs_match_enumeration(self):
        x = [1.83, 0.50, 1.62, 2.48, 1.68, 1.88, 1.55, 3.06, 1.30, 0.99]
        y = [0.878, 0.647, 0.598, 2.05, 1.06, 1.29, 1.06, 3.14, 1.29, 0.99]
        got = wilcoxon_signed_rank(x, y)
        t_oracle, p_oracle = enumeration_oracle(x, y)
        assert got.T == pytest.approx(t_oracle, abs=1e-12)
        assert got.p_value == pytest.approx(p_oracle, abs=1e-12)

    def test_symmetry(self):
        rng = random.Random(3)
        for _ in range(20):
            n = rng.randint(1, 15)
            x = [rng.randint(-3, 3) / 2 for _ in range(n)]
            y = [rng.randint(-3, 3) / 2 for _ in range(n)]
            ab = wilcoxon_signed_rank(x, y)
            ba = wilcoxon_signed_rank(y, x)
            assert ab.T == ba.T
            assert ab.p_value == pytest.approx(ba.p_value, abs=1e-15)

    def test_matches_enumeration_on_random_fixtures_with_ties_and_zeros(self):
        rng = random.Random(41)
        for _ in range(60):
            n = rng.randint(1, 12)
            x = [rng.randint(0, 4) / 2 for _ in range(n)]
            y = [rng.randint(0, 4) / 2 for _ in range(n)]
            got = wilcoxon_signed_rank(x, y)
            t_oracle, p_oracle = enumeration_oracle(x, y)
            assert got.T == pytest.approx(t_oracle, abs=1e-12)
            assert got.p_value == pytest.approx(p_oracle, abs=1e-12)

    def test_uniform_improvement_over_36_configs(self):
        base = [0.5 + i / 1000 for i in range(36)]
        better = [v + 0.01 for v in base]
        got = wilcoxon_signed_rank(better, base)
        assert got.T == 0.0
        assert got.method == "normal-approximation"
        assert got.p_value < 0.001

    def test_pratt_handles_zeros(self):
        got = wilcoxon_signed_rank([1.0, 2.0, 5.0], [1.0, 1.0, 1.0], zero_method="pratt")
        # zero difference ranked (rank 1); nonzero ranks are 2 and 3, both positive
        assert got.n_effective == 2
        assert got.T == 0.0

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            wilcoxon_signed_rank([1.0], [1.0, 2.0])


class TestCompareFeatureSets:
    def grouped(self, shift_h=0.0, shift_sh=0.0):
        rng = random.Random(8)
        base = [0.4 + rng.random() / 5 for _ in range(36)]
        return {
            "s": [result(i + 1, variant="s", f_measure=base[i]) for i in range(36)],
            "h": [result(i + 1, variant="h", f_measure=base[i] + shift_h) for i in range(36)],
            "s+h": [result(i + 1, variant="s+h", f_measure=base[i] + shift_sh) for i in range(36)],
        }

    def test_identical_vectors_give_p_one(self):
        tests = compare_feature_sets(self.grouped())
        assert tests[("s", "h")].p_value == 1.0

    def test_all_three_cells_populated(self):
        tests = compare_feature_sets(self.grouped(shift_h=0.01, shift_sh=0.02))
        assert set(tests) == {("s", "h"), ("s", "s+h"), ("h", "s+h")}
        assert tests[("s", "s+h")].p_value < 0.001

    def test_mismatched_coverage_rejected(self):
        grouped = self.grouped()
        grouped["h"] = grouped["h"][:-1]
        with pytest.raises(ValueError, match="different config_ids"):
            compare_feature_sets(grouped)


class TestEmitReport:
    def results_9x3(self):
        algorithms = [
            "logreg", "gaussian-nb", "cart", "linreg", "dnn-std",
            "dnn-early", "linear-svm", "knn", "random-forest",
        ]
        rng = random.Random(6)
        out = []
        config_id = 1
        for algorithm in algorithms:
            for variant in ("s", "h", "s+h"):
                out.append(
                    result(config_id, algorithm=algorithm, variant=variant,
                           recall=rng.random(), f_measure=rng.random())
                )
            config_id += 1
        return out

    def test_best_by_algorithm_has_nine_rows(self):
        best = best_by_algorithm(self.results_9x3())
        assert len(best) == 9
        assert len({r.algorithm for r in best}) == 9

    def test_report_shapes(self):
        results = self.results_9x3()
        tests = compare_feature_sets(
            {
                v: [r for r in results if r.variant == v]
                for v in ("s", "h", "s+h")
            }
        )
        artifacts = emit_report(results, tests)
        assert set(artifacts) == {
            "ranking_recall.csv",
            "ranking_precision.csv",
            "ranking_f_measure.csv",
            "best_by_algorithm.csv",
            "significance.csv",
            "report.md",
        }
        best_lines = artifacts["best_by_algorithm.csv"].decode().splitlines()
        assert len(best_lines) == 10  # header + 9 algorithms

    def test_report_without_tests_has_rankings_only(self):
        artifacts = emit_report(self.results_9x3(), None)
        assert "significance.csv" not in artifacts
        assert "ranking_recall.csv" in artifacts

    def test_report_is_byte_stable(self):
        results = self.results_9x3()
        a = emit_report(results, None)
        b = emit_report(results, None)
        assert a == b
