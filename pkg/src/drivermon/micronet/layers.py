"""Convolution kernels on channel-major (c, h, w) float32 tensors.

Every kernel accumulates in a fixed order (kernel taps row-major), so the
output is bit-reproducible for identical inputs.
"""
from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatch

DTYPE = np.float32


def as_tensor3(x) -> np.ndarray:
    x = np.asarray(x, dtype=DTYPE)
    if x.ndim != 3 or min(x.shape) < 1:
        raise ShapeMismatch(f"expected a (c, h, w) tensor, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("tensor contains non-finite values")
    return x


def out_size(size: int, stride: int) -> int:
    # zero padding floor(n/2) with odd n gives ceil(size / stride)
    return -(-size // stride)


def relu6(x):
    return np.clip(x, 0.0, 6.0).astype(DTYPE, copy=False)


def _pad(x, p):
    if p == 0:
        return x
    return np.pad(x, ((0, 0), (p, p), (p, p)))


def _check_kernel(n: int, stride: int):
    if n < 1 or n % 2 == 0:
        raise ShapeMismatch(f"kernel size must be odd, got {n}")
    if stride not in (1, 2):
        raise ShapeMismatch(f"stride must be 1 or 2, got {stride}")


def depthwise_conv(x, kernels, stride: int = 1, bias=None) -> np.ndarray:
    """Per-channel n x n convolution, one filter per input channel."""
    x = as_tensor3(x)
    kernels = np.asarray(kernels, dtype=DTYPE)
    c, h, w = x.shape
    if kernels.ndim != 3 or kernels.shape[0] != c or kernels.shape[1] != kernels.shape[2]:
        raise ShapeMismatch(f"depthwise kernels {kernels.shape} do not fit {c} channels")
    n = kernels.shape[1]
    _check_kernel(n, stride)
    oh, ow = out_size(h, stride), out_size(w, stride)
    xp = _pad(x, n // 2)
    out = np.zeros((c, oh, ow), dtype=DTYPE)
    for dy in range(n):
        for dx in range(n):
            patch = xp[:, dy:dy + stride * (oh - 1) + 1:stride, dx:dx + stride * (ow - 1) + 1:stride]
            out += kernels[:, dy, dx, None, None] * patch
    if bias is not None:
        out += np.asarray(bias, dtype=DTYPE).reshape(c, 1, 1)
    return out


def pointwise_conv(x, weights, bias=None) -> np.ndarray:
    """1 x 1 convolution: a (k, c) matrix applied at every pixel."""
    x = as_tensor3(x)
    weights = np.asarray(weights, dtype=DTYPE)
    c, h, w = x.shape
    if weights.ndim != 2 or weights.shape[1] != c:
        raise ShapeMismatch(f"pointwise weights {weights.shape} do not fit {c} input channels")
    out = (weights @ x.reshape(c, h * w)).reshape(weights.shape[0], h, w)
    if bias is not None:
        bias = np.asarray(bias, dtype=DTYPE)
        if bias.shape != (weights.shape[0],):
            raise ShapeMismatch(f"bias shape {bias.shape} != ({weights.shape[0]},)")
        out += bias.reshape(-1, 1, 1)
    return out


def conv2d(x, weights, stride: int = 1, bias=None) -> np.ndarray:
    """Standard dense n x n convolution with weights shaped (k, c, n, n)."""
    x = as_tensor3(x)
    weights = np.asarray(weights, dtype=DTYPE)
    c, h, w = x.shape
    if weights.ndim != 4 or weights.shape[1] != c or weights.shape[2] != weights.shape[3]:
        raise ShapeMismatch(f"conv weights {weights.shape} do not fit {c} input channels")
    k, _, n, _ = weights.shape
    _check_kernel(n, stride)
    oh, ow = out_size(h, stride), out_size(w, stride)
    xp = _pad(x, n // 2)
    out = np.zeros((k, oh * ow), dtype=DTYPE)
    for dy in range(n):
        for dx in range(n):
            patch = xp[:, dy:dy + stride * (oh - 1) + 1:stride, dx:dx + stride * (ow - 1) + 1:stride]
            out += weights[:, :, dy, dx] @ patch.reshape(c, oh * ow)
    out = out.reshape(k, oh, ow)
    if bias is not None:
        out += np.asarray(bias, dtype=DTYPE).reshape(k, 1, 1)
    return out


def global_avg_pool(x) -> np.ndarray:
    x = as_tensor3(x)
    return x.reshape(x.shape[0], -1).mean(axis=1, dtype=np.float64).astype(DTYPE)


def linear(v, weights, bias=None) -> np.ndarray:
    v = np.asarray(v, dtype=DTYPE).ravel()
    weights = np.asarray(weights, dtype=DTYPE)
    if weights.ndim != 2 or weights.shape[1] != v.size:
        raise ShapeMismatch(f"linear weights {weights.shape} do not fit input of size {v.size}")
    out = weights @ v
    if bias is not None:
        out = out + np.asarray(bias, dtype=DTYPE)
    return out
