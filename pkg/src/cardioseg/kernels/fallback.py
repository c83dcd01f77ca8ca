"""Pure-numpy im2col/col2im kernels, used when the compiled extension is absent.

Both backends accumulate in the same (ky, kx)-major order, so their outputs
are bit-identical and the engine is backend-agnostic.
"""

import numpy as np


def im2col(x: np.ndarray, k: int, pad: int) -> np.ndarray:
    """Unfold k x k patches (stride 1) of x (B, C, H, W) into (B, C*k*k, OH*OW)."""
    b, c, h, w = x.shape
    if pad:
        x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    oh = h + 2 * pad - k + 1
    ow = w + 2 * pad - k + 1
    sb, sc, sh, sw = x.strides
    patches = np.lib.stride_tricks.as_strided(
        x, (b, c, k, k, oh, ow), (sb, sc, sh, sw, sh, sw), writeable=False
    )
    return patches.reshape(b, c * k * k, oh * ow)


def col2im(cols: np.ndarray, x_shape: tuple, k: int, pad: int) -> np.ndarray:
    """Adjoint of im2col: scatter-add columns back onto an array of x_shape."""
    b, c, h, w = x_shape
    oh = h + 2 * pad - k + 1
    ow = w + 2 * pad - k + 1
    patches = cols.reshape(b, c, k, k, oh, ow)
    out = np.zeros((b, c, h + 2 * pad, w + 2 * pad), dtype=cols.dtype)
    for ky in range(k):
        for kx in range(k):
            out[:, :, ky : ky + oh, kx : kx + ow] += patches[:, :, ky, kx]
    if pad:
        out = out[:, :, pad : pad + h, pad : pad + w]
    return np.ascontiguousarray(out)
