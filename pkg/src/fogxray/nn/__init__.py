"""Neural network building blocks: layers, model assembly, training loop."""

from .checkpoint import CheckpointError, load_model, read_parameters, save_checkpoint
from .gradcheck import GradCheckResult, gradient_check
from .initializers import glorot_bound, glorot_uniform_init
from .layers import (
    Conv2D,
    Dense,
    Dropout,
    Flatten,
    Layer,
    MaxPool2D,
    conv2d_param_count,
    dense_param_count,
    pool_output_dim,
    relu,
    sigmoid,
)
from .losses import CLIP_EPSILON, binary_cross_entropy, binary_cross_entropy_grad
from .model import (
    DEFAULT_INPUT_HW,
    VARIANTS,
    LayerRow,
    Model,
    build_model,
    format_summary,
    summarize_variant,
)
from .optim import Adam, AdamState, adam_state_for, adam_step
from .training import (
    HISTORY_COLUMNS,
    EpochStats,
    evaluate,
    fit,
    hard_labels,
    history_csv_lines,
    predict,
)

__all__ = [
    "Adam",
    "AdamState",
    "CLIP_EPSILON",
    "CheckpointError",
    "Conv2D",
    "DEFAULT_INPUT_HW",
    "Dense",
    "Dropout",
    "EpochStats",
    "Flatten",
    "GradCheckResult",
    "HISTORY_COLUMNS",
    "Layer",
    "LayerRow",
    "MaxPool2D",
    "Model",
    "VARIANTS",
    "adam_state_for",
    "adam_step",
    "binary_cross_entropy",
    "binary_cross_entropy_grad",
    "build_model",
    "conv2d_param_count",
    "dense_param_count",
    "evaluate",
    "fit",
    "format_summary",
    "glorot_bound",
    "glorot_uniform_init",
    "gradient_check",
    "hard_labels",
    "history_csv_lines",
    "load_model",
    "pool_output_dim",
    "predict",
    "read_parameters",
    "relu",
    "save_checkpoint",
    "sigmoid",
    "summarize_variant",
]
