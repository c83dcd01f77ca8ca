"""Functional forward/backward implementations for every layer kind.

All activations are NCHW. forward_* returns (output, saved) where `saved`
holds whatever backward_* needs; backward_* returns (input_grads, param_grads).
Convolutions are stride-1 with `same` zero padding, built on im2col/col2im.
"""

from __future__ import annotations

import numpy as np

from .. import kernels


# ---------------------------------------------------------------- conv2d

def conv2d_forward(x, weight, bias):
    cout, cin, k, _ = weight.shape
    b, c, h, w = x.shape
    pad = k // 2
    if k == 1:
        y = np.matmul(weight.reshape(cout, cin), x.reshape(b, c, h * w))
    else:
        cols = kernels.im2col(x, k, pad)
        y = np.matmul(weight.reshape(cout, cin * k * k), cols)
    y += bias[:, None]
    return y.reshape(b, cout, h, w), (x,)


def conv2d_backward(grad_y, saved, weight, bias):
    (x,) = saved
    cout, cin, k, _ = weight.shape
    b, c, h, w = x.shape
    pad = k // 2
    gy = grad_y.reshape(b, cout, h * w)
    d_bias = gy.sum(axis=(0, 2))
    w2 = weight.reshape(cout, cin * k * k)
    if k == 1:
        xr = x.reshape(b, c, h * w)
        d_weight = np.matmul(gy, xr.transpose(0, 2, 1)).sum(axis=0)
        dx = np.matmul(w2.T, gy).reshape(b, c, h, w)
    else:
        cols = kernels.im2col(x, k, pad)
        d_weight = np.matmul(gy, cols.transpose(0, 2, 1)).sum(axis=0)
        d_cols = np.matmul(w2.T, gy)
        dx = kernels.col2im(d_cols, x.shape, k, pad)
    return (dx,), {"weight": d_weight.reshape(weight.shape), "bias": d_bias}


# ------------------------------------------------------------- batchnorm

def batchnorm_forward(x, gamma, beta, running_mean, running_var, eps, momentum,
                      training):
    if training:
        mean = x.mean(axis=(0, 2, 3))
        var = x.var(axis=(0, 2, 3))
        running_mean *= momentum
        running_mean += (1.0 - momentum) * mean
        running_var *= momentum
        running_var += (1.0 - momentum) * var
    else:
        mean = running_mean
        var = running_var
    inv_std = 1.0 / np.sqrt(var + eps)
    x_hat = (x - mean[None, :, None, None]) * inv_std[None, :, None, None]
    y = gamma[None, :, None, None] * x_hat + beta[None, :, None, None]
    return y, (x_hat, inv_std, training)


def batchnorm_backward(grad_y, saved, gamma):
    x_hat, inv_std, training = saved
    d_gamma = (grad_y * x_hat).sum(axis=(0, 2, 3))
    d_beta = grad_y.sum(axis=(0, 2, 3))
    scale = (gamma * inv_std)[None, :, None, None]
    if training:
        # batch statistics participate in the forward pass
        m = grad_y.shape[0] * grad_y.shape[2] * grad_y.shape[3]
        dx = scale * (
            grad_y
            - d_beta[None, :, None, None] / m
            - x_hat * d_gamma[None, :, None, None] / m
        )
    else:
        dx = scale * grad_y
    return (dx,), {"gamma": d_gamma, "beta": d_beta}


# ------------------------------------------------------------ activations

def leaky_relu_forward(x, slope):
    pos = x > 0
    return np.where(pos, x, slope * x), (pos, slope)


def leaky_relu_backward(grad_y, saved):
    pos, slope = saved
    return (np.where(pos, grad_y, slope * grad_y),), {}


def sigmoid_forward(x):
    y = np.empty_like(x)
    pos = x >= 0
    y[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    y[~pos] = ex / (1.0 + ex)
    return y, (y,)


def sigmoid_backward(grad_y, saved):
    (y,) = saved
    return (grad_y * y * (1.0 - y),), {}


def softmax_forward(x):
    shifted = x - x.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=1, keepdims=True)
    return y, (y,)


def softmax_backward(grad_y, saved):
    (y,) = saved
    dot = (grad_y * y).sum(axis=1, keepdims=True)
    return (y * (grad_y - dot),), {}


# ------------------------------------------------------ pooling / resize

def maxpool2_forward(x):
    b, c, h, w = x.shape
    h2, w2 = h // 2, w // 2
    windows = x.reshape(b, c, h2, 2, w2, 2).transpose(0, 1, 2, 4, 3, 5)
    windows = windows.reshape(b, c, h2, w2, 4)
    idx = windows.argmax(axis=-1)
    y = np.take_along_axis(windows, idx[..., None], axis=-1)[..., 0]
    return y, (idx, x.shape)


def maxpool2_backward(grad_y, saved):
    idx, x_shape = saved
    b, c, h, w = x_shape
    h2, w2 = h // 2, w // 2
    scatter = np.zeros((b, c, h2, w2, 4), dtype=grad_y.dtype)
    np.put_along_axis(scatter, idx[..., None], grad_y[..., None], axis=-1)
    dx = scatter.reshape(b, c, h2, w2, 2, 2).transpose(0, 1, 2, 4, 3, 5)
    return (dx.reshape(b, c, h, w),), {}


def upsample2_forward(x):
    return x.repeat(2, axis=2).repeat(2, axis=3), ()


def upsample2_backward(grad_y, saved):
    b, c, h, w = grad_y.shape
    dx = grad_y.reshape(b, c, h // 2, 2, w // 2, 2).sum(axis=(3, 5))
    return (dx,), {}


# ------------------------------------------------------- multi-input ops

def concat_forward(inputs):
    sizes = [a.shape[1] for a in inputs]
    return np.concatenate(inputs, axis=1), (sizes,)


def concat_backward(grad_y, saved):
    (sizes,) = saved
    splits = np.cumsum(sizes)[:-1]
    return tuple(np.split(grad_y, splits, axis=1)), {}


def add_forward(inputs):
    out = inputs[0].copy()
    for a in inputs[1:]:
        out += a
    return out, (len(inputs),)


def add_backward(grad_y, saved):
    (n,) = saved
    return (grad_y,) * n, {}
