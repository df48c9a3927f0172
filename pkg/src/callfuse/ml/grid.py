"""The fixed 36-configuration hyper-parameter grid over nine algorithms.

The composition is frozen for reproducibility: 3 logistic regressions,
1 naive Bayes, 4 decision trees, 1 linear regression, 5 standard DNNs,
5 early-stopping DNNs, 4 linear SVMs, 8 k-NNs, and 5 random forests.
"""

from __future__ import annotations

from dataclasses import dataclass, field

ALGORITHMS = (
    "logreg",
    "gaussian-nb",
    "cart",
    "linreg",
    "dnn-std",
    "dnn-early",
    "linear-svm",
    "knn",
    "random-forest",
)

DNN_LAYER_PRESETS = ((16,), (32,), (16, 16), (32, 32), (32, 32, 32))
CART_DEPTHS = (5, 10, 20, None)
SVM_REGULARIZATIONS = (1e-4, 1e-3, 1e-2, 1e-1)
KNN_KS = (1, 3, 5, 7, 9, 11, 15, 21)
FOREST_PRESETS = ((10, None), (25, None), (50, None), (25, 10), (50, 10))
LOGREG_SETTINGS = ((0.1, 0.0), (0.1, 0.01), (0.01, 0.0))


@dataclass(frozen=True)
class ModelConfig:
    config_id: int
    algorithm: str
    hyper_params: dict = field(default_factory=dict, hash=False, compare=False)

    def describe(self) -> str:
        params = ",".join(f"{k}={v}" for k, v in sorted(self.hyper_params.items()))
        return f"{self.algorithm}({params})" if params else self.algorithm


def enumerate_configs() -> list[ModelConfig]:
    """The full grid, config_ids 1..36 with no gaps."""
    configs: list[ModelConfig] = []

    def add(algorithm: str, **hyper_params) -> None:
        configs.append(ModelConfig(len(configs) + 1, algorithm, hyper_params))

    for lr, l2 in LOGREG_SETTINGS:
        add("logreg", learning_rate=lr, l2=l2, epochs=300)
    add("gaussian-nb")
    for depth in CART_DEPTHS:
        add("cart", max_depth=depth)
    add("linreg")
    for layers in DNN_LAYER_PRESETS:
        add("dnn-std", hidden_layers=layers, epochs=200, learning_rate=0.05)
    for layers in DNN_LAYER_PRESETS:
        add("dnn-early", hidden_layers=layers, max_epochs=500, learning_rate=0.05, patience=10)
    for l2 in SVM_REGULARIZATIONS:
        add("linear-svm", l2=l2, learning_rate=0.05, epochs=300)
    for k in KNN_KS:
        add("knn", k=k)
    for n_trees, depth in FOREST_PRESETS:
        add("random-forest", n_trees=n_trees, max_depth=depth)

    assert len(configs) == 36, f"grid size drifted to {len(configs)}"
    return configs
