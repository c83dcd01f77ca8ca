"""Convolution kernels: compiled extension when built, numpy fallback otherwise.

Set CARDIOSEG_NUMPY=1 to force the fallback (e.g. for benchmarking).
"""

import os

import numpy as np

from . import fallback

try:
    from . import _convkern
except ImportError:
    _convkern = None

if _convkern is not None and not os.environ.get("CARDIOSEG_NUMPY"):
    BACKEND = "compiled"
else:
    BACKEND = "numpy"


def im2col(x: np.ndarray, k: int, pad: int) -> np.ndarray:
    """Unfold k x k stride-1 patches of x (B, C, H, W) into (B, C*k*k, OH*OW)."""
    if BACKEND == "compiled":
        return _convkern.im2col(np.ascontiguousarray(x), k, pad)
    return fallback.im2col(x, k, pad)


def col2im(cols: np.ndarray, x_shape: tuple, k: int, pad: int) -> np.ndarray:
    """Adjoint of im2col: scatter-add columns back to an array of x_shape."""
    if BACKEND == "compiled":
        return _convkern.col2im(np.ascontiguousarray(cols), tuple(x_shape), k, pad)
    return fallback.col2im(cols, x_shape, k, pad)
