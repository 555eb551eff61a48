"""Desk-scale trainer for quadratic-activation networks.

Trains tiny classifiers on bundled datasets and exports them as
float-model JSON files that the verified-inference package can
quantize, run, and prove.  The two packages share nothing but that
file format and the command-line interface.
"""

from .datasets import load_dataset, synthetic_blobs, toy_digits
from .train import (
    ConfigError,
    DivergenceError,
    EpochMetrics,
    QuadraticNet,
    TrainConfig,
    export_model,
    import_model,
    model_document,
    normalize_weight_range,
    save_input_batch,
    train_toy_model,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DivergenceError",
    "EpochMetrics",
    "QuadraticNet",
    "TrainConfig",
    "export_model",
    "import_model",
    "load_dataset",
    "model_document",
    "normalize_weight_range",
    "save_input_batch",
    "synthetic_blobs",
    "toy_digits",
    "train_toy_model",
    "__version__",
]
