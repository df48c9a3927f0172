"""First-principles classifier grid, preprocessing, and cross-validation."""

from callfuse.ml.grid import ModelConfig, enumerate_configs
from callfuse.ml.models import train
from callfuse.ml.preprocess import (
    Preprocessor,
    oversample_minority,
    standardize_apply,
    standardize_fit_transform,
)
from callfuse.ml.validate import cross_validate, cross_validate_matrix

__all__ = [
    "ModelConfig",
    "Preprocessor",
    "cross_validate",
    "cross_validate_matrix",
    "enumerate_configs",
    "oversample_minority",
    "standardize_apply",
    "standardize_fit_transform",
    "train",
]
