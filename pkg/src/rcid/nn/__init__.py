"""Minimal tensor math with reverse-mode autodiff, Adam and checkpoints."""

from .checkpoint import (
    FORMAT_VERSION,
    CheckpointError,
    CorruptFile,
    VersionMismatch,
    load_tensors,
    save_tensors,
)
from .gradcheck import GradCheckReport, finite_diff_check
from .optim import AdamConfig, ParameterStore, adam_step
from .tensor import (
    EmptySegment,
    NotScalarLoss,
    ShapeMismatch,
    Tensor,
    absolute,
    add,
    backward,
    concat,
    constant,
    elu,
    gather_rows,
    grad_enabled,
    leaky_relu,
    matmul,
    mean_rows,
    mul,
    no_grad,
    parameter,
    scatter_rows,
    segment_mean,
    segment_softmax,
    segment_sum,
    sigmoid_bce,
    softmax_cross_entropy,
    squared_error,
    sub,
    transpose,
)

__all__ = [
    "AdamConfig",
    "CheckpointError",
    "CorruptFile",
    "EmptySegment",
    "FORMAT_VERSION",
    "GradCheckReport",
    "NotScalarLoss",
    "ParameterStore",
    "ShapeMismatch",
    "Tensor",
    "VersionMismatch",
    "absolute",
    "adam_step",
    "add",
    "backward",
    "concat",
    "constant",
    "elu",
    "finite_diff_check",
    "gather_rows",
    "grad_enabled",
    "leaky_relu",
    "load_tensors",
    "matmul",
    "mean_rows",
    "mul",
    "no_grad",
    "parameter",
    "save_tensors",
    "scatter_rows",
    "segment_mean",
    "segment_softmax",
    "segment_sum",
    "sigmoid_bce",
    "softmax_cross_entropy",
    "squared_error",
    "sub",
    "transpose",
]
