import math

import numpy as np
import pytest

from callfuse.ml.preprocess import (
    oversample_minority,
    standardize_apply,
    standardize_fit_transform,
)


class TestStandardize:
    def test_known_column(self):
        X = np.array([[1.0], [2.0], [3.0]])
        pre, Xt = standardize_fit_transform(X)
        assert pre.means[0] == pytest.approx(2.0)
        assert pre.stds[0] == pytest.approx(math.sqrt(2.0 / 3.0))
        assert Xt[:, 0] == pytest.approx([-1.2247, 0.0, 1.2247], abs=1e-4)

    def test_training_columns_have_zero_mean_unit_std(self):
        rng = np.random.default_rng(5)
        X = rng.normal(3.0, 7.0, size=(40, 6))
        _, Xt = standardize_fit_transform(X)
        assert np.abs(Xt.mean(axis=0)).max() < 1e-9
        assert np.abs(Xt.std(axis=0) - 1.0).max() < 1e-9

    def test_constant_column_dropped(self, caplog):
        X = np.array([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]])
        with caplog.at_level("WARNING", logger="callfuse.ml.preprocess"):
            pre, Xt = standardize_fit_transform(X)
        assert pre.dropped == [1]
        assert Xt.shape == (3, 1)

    def test_apply_uses_train_stats_not_its_own(self):
        rng = np.random.default_rng(8)
        train = rng.normal(0.0, 1.0, size=(30, 3))
        held_out = rng.normal(10.0, 5.0, size=(10, 3))
        pre, _ = standardize_fit_transform(train)
        got = standardize_apply(pre, held_out)
        # independent recomputation from the train stats
        expected = (held_out - train.mean(axis=0)) / train.std(axis=0)
        assert np.allclose(got, expected, atol=1e-12)
        # and definitely not self-standardized
        assert not np.allclose(got.mean(axis=0), 0.0, atol=0.5)

    def test_needs_two_rows(self):
        with pytest.raises(ValueError):
            standardize_fit_transform(np.array([[1.0, 2.0]]))


class TestOversample:
    def data(self, n_min=4, n_maj=10):
        X = np.vstack(
            [
                np.arange(n_maj * 2, dtype=np.float64).reshape(n_maj, 2),
                100 + np.arange(n_min * 2, dtype=np.float64).reshape(n_min, 2),
            ]
        )
        y = np.array([0] * n_maj + [1] * n_min, dtype=np.int64)
        return X, y

    def test_minority_grows_to_rounded_factor(self):
        X, y = self.data()
        X2, y2 = oversample_minority(X, y, factor=1.5, seed=1)
        assert int((y2 == 1).sum()) == 6
        assert int((y2 == 0).sum()) == 10

    def test_factor_one_is_identity(self):
        X, y = self.data()
        X2, y2 = oversample_minority(X, y, factor=1.0, seed=1)
        assert np.array_equal(X2, X)
        assert np.array_equal(y2, y)

    def test_same_seed_identical_output(self):
        X, y = self.data()
        a = oversample_minority(X, y, factor=1.5, seed=9)
        b = oversample_minority(X, y, factor=1.5, seed=9)
        assert np.array_equal(a[0], b[0])
        assert np.array_equal(a[1], b[1])

    def test_majority_multiset_preserved(self):
        X, y = self.data()
        X2, y2 = oversample_minority(X, y, factor=2.0, seed=3)
        before = sorted(map(tuple, X[y == 0]))
        after = sorted(map(tuple, X2[y2 == 0]))
        assert before == after

    def test_new_rows_are_copies_of_minority_rows(self):
        X, y = self.data()
        X2, y2 = oversample_minority(X, y, factor=2.0, seed=3)
        minority_rows = set(map(tuple, X[y == 1]))
        assert all(tuple(row) in minority_rows for row in X2[y2 == 1])

    def test_single_class_rejected(self):
        X = np.zeros((4, 2))
        y = np.ones(4, dtype=np.int64)
        with pytest.raises(ValueError):
            oversample_minority(X, y, 1.5, 0)
