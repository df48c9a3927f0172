"""Stratified k-fold cross-validation with in-fold preprocessing.

Pipeline order per fold: split, oversample the training rows, fit the
standardizer on the (oversampled) training rows, train, score the untouched
test rows. Nothing fitted ever sees test data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from callfuse.dataset import build_feature_matrix
from callfuse.ml.grid import ModelConfig
from callfuse.ml.models import train
from callfuse.ml.preprocess import (
    DEFAULT_OVERSAMPLE_FACTOR,
    oversample_minority,
    standardize_apply,
    standardize_fit_transform,
)
from callfuse.stats import ConfusionMatrix


@dataclass(frozen=True)
class FoldScore:
    fold: int
    matrix: ConfusionMatrix


def stratified_folds(labels: np.ndarray, k: int, seed: int) -> list[np.ndarray]:
    """Test-index arrays for k folds with per-class round-robin assignment."""
    if k < 2:
        raise ValueError("k must be >= 2")
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    for cls in np.unique(labels):
        idx = np.nonzero(labels == cls)[0]
        if len(idx) < k:
            raise ValueError(
                f"class {int(cls)} has {len(idx)} members, too few for {k}-fold stratification"
            )
        rng.shuffle(idx)
        for j in range(k):
            folds[j].extend(idx[j::k].tolist())
    return [np.array(sorted(f), dtype=np.int64) for f in folds]


def _fold_seed(seed: int, fold: int) -> int:
    return int(np.random.SeedSequence([seed, fold]).generate_state(1)[0])


def cross_validate_matrix(
    config: ModelConfig,
    matrix: np.ndarray,
    labels: np.ndarray,
    k: int = 10,
    seed: int = 0,
    oversample_factor: float = DEFAULT_OVERSAMPLE_FACTOR,
) -> list[FoldScore]:
    """Per-fold confusion matrices for one configuration."""
    matrix = np.asarray(matrix, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    folds = stratified_folds(labels, k, seed)
    all_idx = np.arange(len(labels))
    scores: list[FoldScore] = []
    for fold_i, test_idx in enumerate(folds):
        train_mask = np.ones(len(labels), dtype=bool)
        train_mask[test_idx] = False
        train_idx = all_idx[train_mask]
        fold_seed = _fold_seed(seed, fold_i)

        x_train, y_train = oversample_minority(
            matrix[train_idx], labels[train_idx], oversample_factor, fold_seed
        )
        pre, x_train_std = standardize_fit_transform(x_train)
        model = train(config, x_train_std, y_train, seed=fold_seed)
        predictions = model.predict(standardize_apply(pre, matrix[test_idx]))
        scores.append(
            FoldScore(
                fold=fold_i,
                matrix=ConfusionMatrix.from_predictions(labels[test_idx], predictions),
            )
        )
    return scores


def cross_validate(
    config: ModelConfig,
    records,
    variant: str,
    k: int = 10,
    seed: int = 0,
    oversample_factor: float = DEFAULT_OVERSAMPLE_FACTOR,
) -> list[FoldScore]:
    """cross_validate_matrix over a record list's feature-set variant."""
    matrix, labels, _ = build_feature_matrix(records, variant)
    return cross_validate_matrix(config, matrix, labels, k, seed, oversample_factor)
