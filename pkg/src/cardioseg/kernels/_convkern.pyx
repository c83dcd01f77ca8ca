# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled im2col/col2im kernels for stride-1 convolutions.

Accumulation order in col2im matches the numpy fallback ((ky, kx)-major),
so both backends produce bit-identical results.
"""

import numpy as np

cimport cython
cimport numpy as cnp

cnp.import_array()

ctypedef fused real:
    float
    double


@cython.boundscheck(False)
@cython.wraparound(False)
def im2col(real[:, :, :, ::1] x, int k, int pad):
    cdef Py_ssize_t b = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3]
    cdef Py_ssize_t oh = h + 2 * pad - k + 1
    cdef Py_ssize_t ow = w + 2 * pad - k + 1
    dtype = np.float32 if real is float else np.float64
    out_arr = np.zeros((b, c * k * k, oh * ow), dtype=dtype)
    cdef real[:, :, ::1] out = out_arr
    cdef Py_ssize_t bi, ci, ky, kx, oy, ox, sy, sx, row
    for bi in range(b):
        for ci in range(c):
            for ky in range(k):
                for kx in range(k):
                    row = (ci * k + ky) * k + kx
                    for oy in range(oh):
                        sy = oy + ky - pad
                        if sy < 0 or sy >= h:
                            continue
                        for ox in range(ow):
                            sx = ox + kx - pad
                            if 0 <= sx < w:
                                out[bi, row, oy * ow + ox] = x[bi, ci, sy, sx]
    return out_arr


@cython.boundscheck(False)
@cython.wraparound(False)
def col2im(real[:, :, ::1] cols, tuple x_shape, int k, int pad):
    cdef Py_ssize_t b = x_shape[0], c = x_shape[1], h = x_shape[2], w = x_shape[3]
    cdef Py_ssize_t oh = h + 2 * pad - k + 1
    cdef Py_ssize_t ow = w + 2 * pad - k + 1
    dtype = np.float32 if real is float else np.float64
    out_arr = np.zeros((b, c, h, w), dtype=dtype)
    cdef real[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t bi, ci, ky, kx, oy, ox, sy, sx, row
    # (ky, kx)-major accumulation, same order as the numpy fallback
    for ky in range(k):
        for kx in range(k):
            for bi in range(b):
                for ci in range(c):
                    row = (ci * k + ky) * k + kx
                    for oy in range(oh):
                        sy = oy + ky - pad
                        if sy < 0 or sy >= h:
                            continue
                        for ox in range(ow):
                            sx = ox + kx - pad
                            if 0 <= sx < w:
                                out[bi, ci, sy, sx] += cols[bi, row, oy * ow + ox]
    return out_arr
