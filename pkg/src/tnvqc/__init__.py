"""Hybrid matrix-product-state / variational-circuit binary classifiers."""

from __future__ import annotations

from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .data import LabeledDataset, filter_binary, load_split
from .errors import (
    AxisError,
    ConfigError,
    DimensionError,
    FormatError,
    InputError,
    NumericError,
    StateError,
    TnvqcError,
    UsageError,
)
from .features import PcaModel, embed_batch, embed_image, fit_pca, local_feature_map, normalize_pixels, pca_project
from .kernels import BACKEND
from .mps import MpsModel, init_mps, mps_backward, mps_classify_logits, mps_forward
from .tensor import DenseTensor, contract
from .training import EpochMetrics, HybridModel, TrainConfig, build_model, evaluate, loss_and_grad, train
from .vqc import init_params, vqc_backward, vqc_forward

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "AxisError",
    "Checkpoint",
    "ConfigError",
    "DenseTensor",
    "DimensionError",
    "EpochMetrics",
    "FormatError",
    "HybridModel",
    "InputError",
    "LabeledDataset",
    "MpsModel",
    "NumericError",
    "PcaModel",
    "StateError",
    "TnvqcError",
    "TrainConfig",
    "UsageError",
    "build_model",
    "contract",
    "embed_batch",
    "embed_image",
    "evaluate",
    "filter_binary",
    "fit_pca",
    "init_mps",
    "init_params",
    "load_checkpoint",
    "load_split",
    "local_feature_map",
    "loss_and_grad",
    "mps_backward",
    "mps_classify_logits",
    "mps_forward",
    "normalize_pixels",
    "pca_project",
    "save_checkpoint",
    "train",
    "vqc_backward",
    "vqc_forward",
]
