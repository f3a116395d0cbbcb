"""Neural building blocks: convolution, relu, pooling, nearest upsampling.

Tensors are (H, W, C) float32 throughout.  Convolution is implemented as
im2col + GEMM over fixed-size row blocks; block size is a constant so
results do not depend on thread count.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import DimensionError

# Rows per im2col block, bounding peak memory at roughly
# block * W * C * kh * kw * 4 bytes.
_ROW_BLOCK = 64


def conv2d(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray, padding: str = "reflect") -> np.ndarray:
    """Stride-1 cross-correlation with reflect or zero padding.

    ``kernel`` is (out, in, kh, kw) with odd kh == kw; ``bias`` has one
    entry per output channel.
    """
    if x.ndim != 3:
        raise DimensionError(f"expected (H, W, C) input, got shape {x.shape}")
    out_ch, in_ch, kh, kw = kernel.shape
    if x.shape[2] != in_ch:
        raise DimensionError(f"input channels {x.shape[2]} != kernel in-channels {in_ch}")
    if kh != kw or kh % 2 == 0:
        raise DimensionError(f"kernel must be square with odd size, got {kh}x{kw}")
    if padding not in ("reflect", "zero"):
        raise ValueError(f"padding must be 'reflect' or 'zero', got {padding!r}")
    h, w, _ = x.shape
    r = kh // 2
    mode = "reflect" if padding == "reflect" else "constant"
    padded = np.pad(x, ((r, r), (r, r), (0, 0)), mode=mode)
    # (in, kh, kw) -> flattened to match the window layout below.
    kflat = kernel.transpose(1, 2, 3, 0).reshape(in_ch * kh * kw, out_ch).astype(np.float32)
    bias32 = bias.astype(np.float32)
    out = np.empty((h, w, out_ch), dtype=np.float32)
    for y0 in range(0, h, _ROW_BLOCK):
        y1 = min(y0 + _ROW_BLOCK, h)
        win = sliding_window_view(padded[y0 : y1 + 2 * r], (kh, kw), axis=(0, 1))
        # win: (rows, W, C, kh, kw) -> (rows*W, C*kh*kw)
        flat = np.ascontiguousarray(win).reshape((y1 - y0) * w, in_ch * kh * kw)
        out[y0:y1] = (flat @ kflat + bias32).reshape(y1 - y0, w, out_ch)
    return out


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def max_pool2(x: np.ndarray) -> np.ndarray:
    """2x2 window maxima halving H and W; odd edges take the partial window."""
    if x.ndim != 3:
        raise DimensionError(f"expected (H, W, C) input, got shape {x.shape}")
    h, w, c = x.shape
    if h % 2 or w % 2:
        pad_h = h % 2
        pad_w = w % 2
        x = np.pad(x, ((0, pad_h), (0, pad_w), (0, 0)), mode="edge")
        h, w = x.shape[:2]
    blocks = x.reshape(h // 2, 2, w // 2, 2, c)
    return blocks.max(axis=(1, 3))


def upsample_nn2(x: np.ndarray) -> np.ndarray:
    """Nearest-neighbor doubling of H and W."""
    if x.ndim != 3:
        raise DimensionError(f"expected (H, W, C) input, got shape {x.shape}")
    return np.repeat(np.repeat(x, 2, axis=0), 2, axis=1)
