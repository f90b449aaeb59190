"""1-D convolution, transposed convolution, moving-average pooling, unfolding.

All forwards reduce to window views plus BLAS contractions. Transposed
convolution is implemented as zero-dilation + full cross-correlation with the
flipped kernel, and the same core serves as the input-gradient of the plain
convolution (the two operations are adjoint).

Weight layouts follow the usual convention:
  convolution            (out_channels, in_channels, kernel)
  transposed convolution (in_channels, out_channels, kernel)
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..errors import ConfigError, DimensionError
from .core import Parameter, Tensor, _node, accumulate_grad


def _im2col(x: np.ndarray, kernel: int, stride: int) -> np.ndarray:
    """Flattened sliding windows: (B,C,L) -> (B*T, C*K) with T output steps."""
    b, c, n = x.shape
    steps = (n - kernel) // stride + 1
    sb, sc, sn = x.strides
    win = np.lib.stride_tricks.as_strided(
        x, (b, steps, c, kernel), (sb, sn * stride, sc, sn), writeable=False
    )
    return np.ascontiguousarray(win).reshape(b * steps, c * kernel)

def _correlate(x: np.ndarray, w: np.ndarray, stride: int) -> np.ndarray:
    """Valid cross-correlation of (B,Ci,L) with (Co,Ci,K) -> (B,Co,T)."""
    out_ch, in_ch, kernel = w.shape
    b = x.shape[0]
    cols = _im2col(x, kernel, stride)
    out = cols @ w.reshape(out_ch, in_ch * kernel).T  # (B*T, Co)
    return np.ascontiguousarray(out.reshape(b, -1, out_ch).transpose(0, 2, 1))

def _transpose_correlate(x: np.ndarray, w: np.ndarray, stride: int) -> np.ndarray:
    """Transposed convolution of (B,Ci,L) with (Ci,Co,K) -> (B,Co,(L-1)*s+K).

    One channel contraction followed by K strided scatter-adds; much cheaper
    than windowing a zero-dilated input.
    """
    b, _, n = x.shape
    kernel = w.shape[2]
    out = np.zeros((b, w.shape[1], (n - 1) * stride + kernel))
    mixed = np.einsum("bil,iok->bokl", x, w, optimize=True)  # (B,Co,K,L)
    span = (n - 1) * stride + 1
    for k in range(kernel):
        out[:, :, k : k + span : stride] += mixed[:, :, k, :]
    return out


def conv1d_output_length(length: int, kernel: int, stride: int) -> int:
    return (length - kernel) // stride + 1

def deconv1d_output_length(length: int, kernel: int, stride: int) -> int:
    return (length - 1) * stride + kernel


def _check_3d(x: Tensor, name: str):
    if x.data.ndim != 3:
        raise DimensionError(f"{name} expects a (batch, channels, length) tensor, got {x.data.shape}")


def conv1d(x: Tensor, weight: Parameter, bias, stride: int) -> Tensor:
    """Valid (no padding) strided cross-correlation plus per-channel bias."""
    _check_3d(x, "conv1d")
    out_ch, in_ch, kernel = weight.data.shape
    if x.data.shape[1] != in_ch:
        raise DimensionError(
            f"conv1d channel axis mismatch: input has {x.data.shape[1]} channels, "
            f"weight expects {in_ch}"
        )
    if x.data.shape[2] < kernel:
        raise DimensionError(
            f"conv1d length axis too short: input length {x.data.shape[2]} < kernel {kernel}"
        )
    batch = x.data.shape[0]
    cols = _im2col(x.data, kernel, stride)  # shared with the weight gradient
    out_data = cols @ weight.data.reshape(out_ch, in_ch * kernel).T
    out_data = np.ascontiguousarray(out_data.reshape(batch, -1, out_ch).transpose(0, 2, 1))
    if bias is not None:
        out_data += bias.data[None, :, None]

    def bwd():
        g = out.grad
        if bias is not None:
            accumulate_grad(bias, g.sum(axis=(0, 2)))
        g2d = np.ascontiguousarray(g.transpose(0, 2, 1)).reshape(cols.shape[0], out_ch)
        accumulate_grad(weight, (g2d.T @ cols).reshape(weight.data.shape))
        if x.requires_grad:
            gx = _transpose_correlate(g, weight.data, stride)
            full = x.data.shape[2]
            if gx.shape[2] < full:  # conv dropped a tail shorter than the stride
                pad = np.zeros((gx.shape[0], gx.shape[1], full))
                pad[:, :, : gx.shape[2]] = gx
                gx = pad
            accumulate_grad(x, gx)

    parents = (x, weight) if bias is None else (x, weight, bias)
    out = _node(out_data, parents, bwd)
    return out


def deconv1d(x: Tensor, weight: Parameter, bias, stride: int) -> Tensor:
    """Transposed convolution (no padding, no output padding)."""
    _check_3d(x, "deconv1d")
    in_ch, out_ch, kernel = weight.data.shape
    if x.data.shape[1] != in_ch:
        raise DimensionError(
            f"deconv1d channel axis mismatch: input has {x.data.shape[1]} channels, "
            f"weight expects {in_ch}"
        )
    out_data = _transpose_correlate(x.data, weight.data, stride)
    if bias is not None:
        out_data += bias.data[None, :, None]

    def bwd():
        g = out.grad
        if bias is not None:
            accumulate_grad(bias, g.sum(axis=(0, 2)))
        # windows of the output gradient line up with the input positions
        batch, _, length = x.data.shape
        cols_g = _im2col(g, kernel, stride)  # (B*L_in, Co*K)
        x2d = np.ascontiguousarray(x.data.transpose(0, 2, 1)).reshape(cols_g.shape[0], in_ch)
        accumulate_grad(weight, (x2d.T @ cols_g).reshape(weight.data.shape))
        if x.requires_grad:
            gx = cols_g @ weight.data.reshape(in_ch, out_ch * kernel).T  # (B*L_in, Ci)
            accumulate_grad(x, np.ascontiguousarray(gx.reshape(batch, length, in_ch).transpose(0, 2, 1)))

    parents = (x, weight) if bias is None else (x, weight, bias)
    out = _node(out_data, parents, bwd)
    return out


@lru_cache(maxsize=32)
def _moving_average_matrix(length: int, window: int) -> np.ndarray:
    """Dense (length, length) map for a centered, edge-replicated moving average.

    Entries are integer counts divided by the window, so a constant series
    maps to itself up to one exactly-rounded multiply/divide pair. Cached
    matrices are read-only.
    """
    half = window // 2
    padded = np.clip(np.arange(-half, length + half), 0, length - 1)
    windows = np.lib.stride_tricks.sliding_window_view(padded, window)
    counts = np.zeros((length, length))
    rows = np.repeat(np.arange(length), window)
    np.add.at(counts, (rows, windows.ravel()), 1.0)
    counts.setflags(write=False)
    return counts


def moving_average_same(values: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average along the last axis, edges replicated.

    Output length equals input length. The window must be odd.
    """
    if window < 1 or window % 2 == 0:
        raise ConfigError(f"moving-average window must be odd and >= 1, got {window}")
    values = np.asarray(values, dtype=np.float64)
    if values.shape[-1] == 0:
        raise DimensionError("moving_average_same needs a non-empty series")
    if window == 1:
        return values.copy()
    counts = _moving_average_matrix(values.shape[-1], window)
    return (values @ counts.T) / window


def avgpool1d_same(x: Tensor, window: int) -> Tensor:
    """Autodiff-aware centered moving average along the last axis."""
    if window < 1 or window % 2 == 0:
        raise ConfigError(f"moving-average window must be odd and >= 1, got {window}")
    if x.data.shape[-1] == 0:
        raise DimensionError("avgpool1d_same needs a non-empty series")
    if window == 1:
        counts = None
        out_data = x.data.copy()
    else:
        counts = _moving_average_matrix(x.data.shape[-1], window)
        out_data = (x.data @ counts.T) / window

    def bwd():
        g = out.grad
        accumulate_grad(x, g.copy() if counts is None else (g @ counts) / window)

    out = _node(out_data, (x,), bwd)
    return out


def unfold1d(x: Tensor, window: int) -> Tensor:
    """Sliding windows of a 1-D series: (n,) -> (n - window, window).

    Row t holds x[t : t + window], i.e. the `window` values preceding index
    t + window. The final window ending at the last element is omitted so
    every row has a successor to predict.
    """
    if x.data.ndim != 1:
        raise DimensionError(f"unfold1d expects a 1-D series, got shape {x.data.shape}")
    n = x.data.shape[0]
    if n <= window:
        raise DimensionError(f"unfold1d needs more than {window} values, got {n}")
    out_data = np.lib.stride_tricks.sliding_window_view(x.data, window)[: n - window].copy()

    def bwd():
        g = out.grad
        gx = np.zeros(n)
        for offset in range(window):
            gx[offset : offset + n - window] += g[:, offset]
        accumulate_grad(x, gx)

    out = _node(out_data, (x,), bwd)
    return out
