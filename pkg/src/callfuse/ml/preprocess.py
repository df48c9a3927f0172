"""Feature standardization and minority oversampling.

Both are fitted/applied inside each training fold only, never on test data;
the cross-validation driver owns that ordering.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_OVERSAMPLE_FACTOR = 1.5


@dataclass
class Preprocessor:
    """Per-column training statistics; zero-variance columns are dropped."""

    means: np.ndarray
    stds: np.ndarray
    kept: np.ndarray  # indices of retained columns
    dropped: list[int] = field(default_factory=list)


def standardize_fit_transform(train: np.ndarray) -> tuple[Preprocessor, np.ndarray]:
    """Fit per-column mean/population-std on training rows and transform them."""
    if train.ndim != 2 or train.shape[0] < 2:
        raise ValueError("standardization needs a 2-d matrix with at least 2 rows")
    means = train.mean(axis=0)
    stds = train.std(axis=0)  # population std
    kept = np.nonzero(stds > 0.0)[0]
    dropped = [int(i) for i in np.nonzero(stds == 0.0)[0]]
    if dropped:
        logger.warning("dropping zero-variance columns %s", dropped)
    pre = Preprocessor(means=means[kept], stds=stds[kept], kept=kept, dropped=dropped)
    return pre, standardize_apply(pre, train)


def standardize_apply(p: Preprocessor, matrix: np.ndarray) -> np.ndarray:
    """Transform rows with the stored training statistics."""
    return (matrix[:, p.kept] - p.means) / p.stds


def oversample_minority(
    matrix: np.ndarray,
    labels: np.ndarray,
    factor: float = DEFAULT_OVERSAMPLE_FACTOR,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Duplicate minority rows (sampling with replacement) up to factor x count.

    Majority rows are untouched; duplicated rows are appended after the
    originals in draw order, so a fixed seed reproduces the exact output.
    """
    classes = np.unique(labels)
    if len(classes) != 2:
        raise ValueError(f"oversampling needs exactly 2 classes, got {len(classes)}")
    counts = {int(c): int((labels == c).sum()) for c in classes}
    # tie goes to the positive class, the conventional minority
    minority = 1 if counts[0] == counts[1] else min(counts, key=counts.get)
    n_min = counts[minority]
    target = round(factor * n_min)
    extra = max(0, target - n_min)
    if extra == 0:
        return matrix.copy(), labels.copy()
    rng = np.random.default_rng(seed)
    minority_idx = np.nonzero(labels == minority)[0]
    picks = rng.choice(minority_idx, size=extra, replace=True)
    return (
        np.vstack([matrix, matrix[picks]]),
        np.concatenate([labels, labels[picks]]),
    )
