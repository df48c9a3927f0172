import numpy as np
import pytest

from callfuse.dataset import BugTables, compose_dataset
from callfuse.graph import SourcePosition
from callfuse.ingest import StaticMetricsRow
from callfuse.invocation import InvocationCounts
from callfuse.ml.grid import enumerate_configs
from callfuse.ml.validate import cross_validate, cross_validate_matrix, stratified_folds

from datagen import make_two_blobs


def knn_config():
    return next(c for c in enumerate_configs() if c.hyper_params.get("k") == 3)


class TestStratifiedFolds:
    def test_balanced_four_rows_two_folds(self):
        y = np.array([0, 1, 0, 1], dtype=np.int64)
        folds = stratified_folds(y, k=2, seed=0)
        assert len(folds) == 2
        for fold in folds:
            assert len(fold) == 2
            assert sorted(y[fold].tolist()) == [0, 1]

    def test_same_seed_same_assignment(self):
        y = np.array([0, 1] * 20, dtype=np.int64)
        a = stratified_folds(y, k=5, seed=4)
        b = stratified_folds(y, k=5, seed=4)
        assert all(np.array_equal(f1, f2) for f1, f2 in zip(a, b))

    def test_folds_partition_all_rows(self):
        y = np.array([0] * 17 + [1] * 13, dtype=np.int64)
        folds = stratified_folds(y, k=4, seed=2)
        combined = sorted(int(i) for fold in folds for i in fold)
        assert combined == list(range(30))

    def test_small_class_rejected(self):
        y = np.array([0] * 10 + [1], dtype=np.int64)
        with pytest.raises(ValueError, match="class 1"):
            stratified_folds(y, k=2, seed=0)


class TestCrossValidateMatrix:
    def test_fold_matrices_cover_every_row_once(self):
        X, y = make_two_blobs(seed=55, n=60)
        scores = cross_validate_matrix(knn_config(), X, y, k=5, seed=3)
        assert len(scores) == 5
        assert sum(s.matrix.total() for s in scores) == 60

    def test_bit_identical_across_runs(self):
        X, y = make_two_blobs(seed=56, n=50)
        a = cross_validate_matrix(knn_config(), X, y, k=5, seed=9)
        b = cross_validate_matrix(knn_config(), X, y, k=5, seed=9)
        assert [s.matrix for s in a] == [s.matrix for s in b]

    def test_separable_data_scores_high(self):
        X, y = make_two_blobs(seed=57, n=60)
        scores = cross_validate_matrix(knn_config(), X, y, k=5, seed=1)
        total = sum(s.matrix.tp + s.matrix.tn for s in scores)
        assert total / 60 >= 0.95


class TestCrossValidateRecords:
    def records(self):
        rows, counts = [], []
        rng = np.random.default_rng(12)
        for line in range(1, 41):
            pos = SourcePosition("a.js", line, 1)
            loc = int(rng.integers(5, 80))
            rows.append(
                StaticMetricsRow(
                    id=pos, name=f"fn{line}", LOC=loc, LLOC=loc - 1, NOS=loc // 2,
                    McCC=int(rng.integers(1, 9)), NL=int(rng.integers(0, 4)),
                    CD=float(rng.uniform(0, 1)), CLOC=int(rng.integers(0, 9)),
                    DLOC=int(rng.integers(0, 5)), NII=int(rng.integers(0, 14)),
                    NOI=int(rng.integers(0, 14)),
                )
            )
            counts.append(InvocationCounts(pos, int(rng.integers(0, 9)), int(rng.integers(0, 9))))
        matched = frozenset(r.id for r in rows[:12])
        bug = BugTables("B1", matched, tuple(rows[:12]), tuple(counts[:12]))
        return compose_dataset([bug], (rows, counts))

    def test_wrapper_runs_on_all_variants(self):
        records = self.records()
        for variant in ("s", "h", "s+h"):
            scores = cross_validate(knn_config(), records, variant, k=3, seed=2)
            assert len(scores) == 3
            assert sum(s.matrix.total() for s in scores) == len(records)
