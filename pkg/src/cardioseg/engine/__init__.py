from .network import (
    LAYER_KINDS,
    ExecutionError,
    LayerSpec,
    Network,
    NetworkSpec,
    ShapeError,
    count_parameters,
    infer_shapes,
    param_shapes,
)
from .tensor import AdamState, GradientError, Tensor, adam_step

__all__ = [
    "LAYER_KINDS",
    "AdamState",
    "ExecutionError",
    "GradientError",
    "LayerSpec",
    "Network",
    "NetworkSpec",
    "ShapeError",
    "Tensor",
    "adam_step",
    "count_parameters",
    "infer_shapes",
    "param_shapes",
]
