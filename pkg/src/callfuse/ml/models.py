"""Nine binary classifiers implemented from first principles on numpy.

Every tie-break is a fixed deterministic rule (documented per model), every
source of randomness flows from an explicit seed, and training is
single-threaded: identical inputs and seeds give bit-identical models.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from callfuse.ml.grid import ModelConfig

logger = logging.getLogger(__name__)

_VAR_FLOOR = 1e-9
_P_CLIP = 1e-12


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class ConstantModel:
    """Fallback when training data has a single class."""

    algorithm: str
    label: int

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.full(len(X), self.label, dtype=np.int64)


class LogisticRegressionModel:
    """Sigmoid + cross-entropy via full-batch gradient descent, threshold 0.5."""

    algorithm = "logreg"

    def __init__(self, learning_rate: float, l2: float, epochs: int):
        self.learning_rate = learning_rate
        self.l2 = l2
        self.epochs = epochs
        self.w: np.ndarray | None = None
        self.b = 0.0

    def fit(self, X: np.ndarray, y: np.ndarray) -> "LogisticRegressionModel":
        n, d = X.shape
        self.w = np.zeros(d)
        self.b = 0.0
        for _ in range(self.epochs):
            p = _sigmoid(X @ self.w + self.b)
            err = p - y
            self.w -= self.learning_rate * (X.T @ err / n + self.l2 * self.w)
            self.b -= self.learning_rate * float(err.mean())
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (X @ self.w + self.b >= 0.0).astype(np.int64)


class GaussianNBModel:
    """Per-class per-feature Gaussian likelihoods with a variance floor."""

    algorithm = "gaussian-nb"

    def fit(self, X: np.ndarray, y: np.ndarray) -> "GaussianNBModel":
        self.classes = np.array([0, 1])
        self.log_priors = np.empty(2)
        self.means = np.empty((2, X.shape[1]))
        self.vars = np.empty((2, X.shape[1]))
        for c in (0, 1):
            rows = X[y == c]
            self.log_priors[c] = math.log(len(rows) / len(X))
            self.means[c] = rows.mean(axis=0)
            self.vars[c] = np.maximum(rows.var(axis=0), _VAR_FLOOR)
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        scores = np.empty((len(X), 2))
        for c in (0, 1):
            diff = X - self.means[c]
            log_like = -0.5 * (
                np.log(2.0 * np.pi * self.vars[c]) + diff * diff / self.vars[c]
            ).sum(axis=1)
            scores[:, c] = self.log_priors[c] + log_like
        # argmax picks class 0 on exact ties
        return scores.argmax(axis=1).astype(np.int64)


@dataclass
class _Leaf:
    label: int


@dataclass
class _Split:
    feature: int
    threshold: float
    left: "_Split | _Leaf"
    right: "_Split | _Leaf"


def _majority(y: np.ndarray) -> int:
    # vote tie goes to label 0
    return 1 if 2 * int(y.sum()) > len(y) else 0


def _gini(counts0: np.ndarray, counts1: np.ndarray, total: np.ndarray) -> np.ndarray:
    return 1.0 - (counts0 * counts0 + counts1 * counts1) / (total * total)


def _best_split(X: np.ndarray, y: np.ndarray, features) -> tuple[int, float, float] | None:
    """Lowest weighted-Gini split; ties go to the lowest feature index, then
    the lowest threshold (guaranteed by strict-improvement first-found order)."""
    n = len(y)
    total1 = int(y.sum())
    best: tuple[float, int, float] | None = None
    for f in features:
        xs = X[:, f]
        order = np.argsort(xs, kind="stable")
        xs_sorted = xs[order]
        boundaries = np.nonzero(xs_sorted[1:] != xs_sorted[:-1])[0]
        if len(boundaries) == 0:
            continue
        prefix1 = np.cumsum(y[order])
        left_n = (boundaries + 1).astype(np.float64)
        left1 = prefix1[boundaries].astype(np.float64)
        left0 = left_n - left1
        right_n = n - left_n
        right1 = total1 - left1
        right0 = right_n - right1
        cost = (left_n * _gini(left0, left1, left_n) + right_n * _gini(right0, right1, right_n)) / n
        j = int(np.argmin(cost))  # first minimum = lowest threshold
        if best is None or cost[j] < best[0] - 1e-15:
            threshold = (xs_sorted[boundaries[j]] + xs_sorted[boundaries[j] + 1]) / 2.0
            best = (float(cost[j]), int(f), float(threshold))
    if best is None:
        return None
    return best[1], best[2], best[0]


def _grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    depth: int,
    max_depth: int | None,
    rng: np.random.Generator | None,
    n_features_per_split: int | None,
) -> _Split | _Leaf:
    if len(y) < 2 or int(y.sum()) in (0, len(y)):
        return _Leaf(_majority(y))
    if max_depth is not None and depth >= max_depth:
        return _Leaf(_majority(y))
    d = X.shape[1]
    if n_features_per_split is not None and rng is not None and n_features_per_split < d:
        features = np.sort(rng.choice(d, size=n_features_per_split, replace=False))
    else:
        features = range(d)
    found = _best_split(X, y, features)
    if found is None:
        return _Leaf(_majority(y))
    feature, threshold, cost = found
    n1 = int(y.sum())
    parent_gini = 1.0 - ((len(y) - n1) ** 2 + n1**2) / len(y) ** 2
    if cost >= parent_gini - 1e-12:
        return _Leaf(_majority(y))
    mask = X[:, feature] < threshold
    return _Split(
        feature=feature,
        threshold=threshold,
        left=_grow_tree(X[mask], y[mask], depth + 1, max_depth, rng, n_features_per_split),
        right=_grow_tree(X[~mask], y[~mask], depth + 1, max_depth, rng, n_features_per_split),
    )


def _tree_predict(node: _Split | _Leaf, X: np.ndarray) -> np.ndarray:
    out = np.empty(len(X), dtype=np.int64)
    for i, row in enumerate(X):
        cur = node
        while isinstance(cur, _Split):
            cur = cur.left if row[cur.feature] < cur.threshold else cur.right
        out[i] = cur.label
    return out


class CartModel:
    """Gini-impurity decision tree with best single-feature threshold splits."""

    algorithm = "cart"

    def __init__(self, max_depth: int | None):
        self.max_depth = max_depth
        self.root: _Split | _Leaf | None = None

    def fit(self, X: np.ndarray, y: np.ndarray) -> "CartModel":
        self.root = _grow_tree(X, y, 0, self.max_depth, None, None)
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        return _tree_predict(self.root, X)


class LinearRegressionModel:
    """Least squares on the 0/1 labels; classify by output >= 0.5."""

    algorithm = "linreg"

    def fit(self, X: np.ndarray, y: np.ndarray) -> "LinearRegressionModel":
        design = np.hstack([X, np.ones((len(X), 1))])
        self.beta, *_ = np.linalg.lstsq(design, y.astype(np.float64), rcond=None)
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        design = np.hstack([X, np.ones((len(X), 1))])
        return (design @ self.beta >= 0.5).astype(np.int64)


class DnnModel:
    """Fully-connected net: ReLU hidden layers, sigmoid output, full-batch GD.

    With patience set, training stops once the loss has not improved for
    `patience` consecutive epochs; the per-epoch loss trace is kept for
    inspection either way.
    """

    def __init__(
        self,
        hidden_layers: tuple[int, ...],
        epochs: int,
        learning_rate: float,
        seed: int,
        patience: int | None = None,
        tol: float = 1e-6,
        algorithm: str = "dnn-std",
    ):
        self.hidden_layers = tuple(hidden_layers)
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.seed = seed
        self.patience = patience
        self.tol = tol
        self.algorithm = algorithm
        self.loss_trace: list[float] = []

    def fit(self, X: np.ndarray, y: np.ndarray) -> "DnnModel":
        rng = np.random.default_rng(self.seed)
        sizes = [X.shape[1], *self.hidden_layers, 1]
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(sizes, sizes[1:]):
            self.weights.append(rng.normal(0.0, math.sqrt(2.0 / fan_in), (fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

        n = len(X)
        target = y.astype(np.float64).reshape(-1, 1)
        best_loss = math.inf
        stale = 0
        self.loss_trace = []
        for _ in range(self.epochs):
            activations = [X]
            for i, (W, b) in enumerate(zip(self.weights, self.biases)):
                z = activations[-1] @ W + b
                activations.append(_sigmoid(z) if i == len(self.weights) - 1 else np.maximum(z, 0.0))
            p = np.clip(activations[-1], _P_CLIP, 1.0 - _P_CLIP)
            loss = float(-(target * np.log(p) + (1 - target) * np.log(1 - p)).mean())
            self.loss_trace.append(loss)

            delta = (activations[-1] - target) / n
            for i in range(len(self.weights) - 1, -1, -1):
                grad_w = activations[i].T @ delta
                grad_b = delta.sum(axis=0)
                if i > 0:
                    delta = (delta @ self.weights[i].T) * (activations[i] > 0.0)
                self.weights[i] -= self.learning_rate * grad_w
                self.biases[i] -= self.learning_rate * grad_b

            if self.patience is not None:
                if best_loss - loss > self.tol:
                    best_loss = loss
                    stale = 0
                else:
                    stale += 1
                    if stale >= self.patience:
                        break
        return self

    def _forward(self, X: np.ndarray) -> np.ndarray:
        a = X
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ W + b
            a = _sigmoid(z) if i == len(self.weights) - 1 else np.maximum(z, 0.0)
        return a.reshape(-1)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self._forward(X) >= 0.5).astype(np.int64)


class LinearSvmModel:
    """Hinge loss with L2 regularization, trained by full-batch subgradient descent."""

    algorithm = "linear-svm"

    def __init__(self, l2: float, learning_rate: float, epochs: int):
        self.l2 = l2
        self.learning_rate = learning_rate
        self.epochs = epochs

    def fit(self, X: np.ndarray, y: np.ndarray) -> "LinearSvmModel":
        n, d = X.shape
        y_pm = 2.0 * y - 1.0
        self.w = np.zeros(d)
        self.b = 0.0
        for _ in range(self.epochs):
            margins = y_pm * (X @ self.w + self.b)
            violating = margins < 1.0
            grad_w = self.l2 * self.w - (X[violating] * y_pm[violating, None]).sum(axis=0) / n
            grad_b = -float(y_pm[violating].sum()) / n
            self.w -= self.learning_rate * grad_w
            self.b -= self.learning_rate * grad_b
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (X @ self.w + self.b >= 0.0).astype(np.int64)


class KnnModel:
    """Euclidean k-NN, majority vote. Distance ties keep the lower training
    row index (stable sort); vote ties go to label 0."""

    algorithm = "knn"

    def __init__(self, k: int):
        self.k = k

    def fit(self, X: np.ndarray, y: np.ndarray) -> "KnnModel":
        self.X_train = X
        self.y_train = y
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        k = min(self.k, len(self.X_train))
        out = np.empty(len(X), dtype=np.int64)
        for i, row in enumerate(X):
            d2 = ((self.X_train - row) ** 2).sum(axis=1)
            nearest = np.argsort(d2, kind="stable")[:k]
            ones = int(self.y_train[nearest].sum())
            out[i] = 1 if 2 * ones > k else 0
        return out


class RandomForestModel:
    """Bootstrap-bagged Gini trees with sqrt(d) features per split; majority
    vote over trees, tree-vote tie to label 0."""

    algorithm = "random-forest"

    def __init__(self, n_trees: int, max_depth: int | None, seed: int):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.seed = seed

    def fit(self, X: np.ndarray, y: np.ndarray) -> "RandomForestModel":
        n, d = X.shape
        n_sub = max(1, int(math.sqrt(d)))
        self.trees = []
        for child_seed in np.random.SeedSequence(self.seed).spawn(self.n_trees):
            rng = np.random.default_rng(child_seed)
            boot = rng.integers(0, n, size=n)
            self.trees.append(
                _grow_tree(X[boot], y[boot], 0, self.max_depth, rng, n_sub)
            )
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        votes = np.zeros(len(X), dtype=np.int64)
        for tree in self.trees:
            votes += _tree_predict(tree, X)
        return (2 * votes > self.n_trees).astype(np.int64)


def train(config: ModelConfig, matrix: np.ndarray, labels: np.ndarray, seed: int = 0):
    """Train one grid configuration; single-class data degrades to a constant
    predictor with a diagnostic instead of crashing."""
    X = np.asarray(matrix, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("matrix and labels must align")
    present = np.unique(y)
    if len(present) < 2:
        logger.warning(
            "config %s: training data has a single class (%s); constant predictor",
            config.config_id,
            present.tolist(),
        )
        return ConstantModel(config.algorithm, int(present[0]))

    hp = config.hyper_params
    if config.algorithm == "logreg":
        model = LogisticRegressionModel(hp["learning_rate"], hp["l2"], hp["epochs"])
    elif config.algorithm == "gaussian-nb":
        model = GaussianNBModel()
    elif config.algorithm == "cart":
        model = CartModel(hp["max_depth"])
    elif config.algorithm == "linreg":
        model = LinearRegressionModel()
    elif config.algorithm == "dnn-std":
        model = DnnModel(hp["hidden_layers"], hp["epochs"], hp["learning_rate"], seed)
    elif config.algorithm == "dnn-early":
        model = DnnModel(
            hp["hidden_layers"],
            hp["max_epochs"],
            hp["learning_rate"],
            seed,
            patience=hp["patience"],
            algorithm="dnn-early",
        )
    elif config.algorithm == "linear-svm":
        model = LinearSvmModel(hp["l2"], hp["learning_rate"], hp["epochs"])
    elif config.algorithm == "knn":
        model = KnnModel(hp["k"])
    elif config.algorithm == "random-forest":
        model = RandomForestModel(hp["n_trees"], hp["max_depth"], seed)
    else:
        raise ValueError(f"unknown algorithm {config.algorithm!r}")
    return model.fit(X, y)
