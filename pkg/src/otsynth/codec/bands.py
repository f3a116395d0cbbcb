"""Weight-free multiband codec with exact inversion.

Stands in for the neural auto-encoder behind the same interface.  The
layer-l encoding recursively splits 2x2 pixel blocks into a quarter-scale
mean plus three band-pass residuals, then packs every residual level into
channels at the coarsest grid.  A layer-l feature tensor therefore has
3 * 4^(l-1) channels and is invertible back to the image exactly.
"""

from __future__ import annotations

import numpy as np

from ..errors import DimensionError, SizeError


def _split(x: np.ndarray):
    a = x[0::2, 0::2]
    b = x[0::2, 1::2]
    c = x[1::2, 0::2]
    d = x[1::2, 1::2]
    low = (a + b + c + d) / 4.0
    d1 = (a - b + c - d) / 4.0
    d2 = (a + b - c - d) / 4.0
    d3 = (a - b - c + d) / 4.0
    return low, np.concatenate([d1, d2, d3], axis=2)


def _merge(low: np.ndarray, detail: np.ndarray) -> np.ndarray:
    c3 = low.shape[2]
    d1 = detail[:, :, :c3]
    d2 = detail[:, :, c3 : 2 * c3]
    d3 = detail[:, :, 2 * c3 :]
    h, w = low.shape[:2]
    out = np.empty((2 * h, 2 * w, c3), dtype=low.dtype)
    out[0::2, 0::2] = low + d1 + d2 + d3
    out[0::2, 1::2] = low - d1 + d2 - d3
    out[1::2, 0::2] = low + d1 - d2 - d3
    out[1::2, 1::2] = low - d1 - d2 + d3
    return out


def _space_to_depth(x: np.ndarray, r: int) -> np.ndarray:
    if r == 1:
        return x
    h, w, c = x.shape
    return x.reshape(h // r, r, w // r, r, c).transpose(0, 2, 1, 3, 4).reshape(h // r, w // r, r * r * c)


def _depth_to_space(x: np.ndarray, r: int, channels: int) -> np.ndarray:
    if r == 1:
        return x
    h, w, _ = x.shape
    return x.reshape(h, w, r, r, channels).transpose(0, 2, 1, 3, 4).reshape(h * r, w * r, channels)


class PyramidCodec:
    """Exact band-decomposition codec sharing the auto-encoder interface."""

    name = "pyramid"

    def channels(self, layer: int) -> int:
        return 3 * 4 ** (layer - 1)

    def downsample_factor(self, layer: int) -> int:
        return 2 ** (layer - 1)

    def encode(self, img: np.ndarray, layer: int) -> np.ndarray:
        if img.ndim != 3 or img.shape[2] != 3:
            raise DimensionError(f"expected (H, W, 3) image, got shape {img.shape}")
        factor = self.downsample_factor(layer)
        h, w = img.shape[:2]
        if h % factor or w % factor:
            raise SizeError(f"image {h}x{w} not divisible by {factor}")
        x = img.astype(np.float32, copy=False)
        details = []
        for _ in range(layer - 1):
            x, det = _split(x)
            details.append(det)
        # Channel layout: quarter-scale mean first, then residual levels
        # from coarsest to finest, finer levels packed spatially.
        parts = [x]
        for step in reversed(range(layer - 1)):
            pack = factor // 2 ** (step + 1)
            parts.append(_space_to_depth(details[step], pack))
        return np.concatenate(parts, axis=2)

    def decode(self, features: np.ndarray, layer: int) -> np.ndarray:
        expected = self.channels(layer)
        if features.ndim != 3 or features.shape[2] != expected:
            raise DimensionError(
                f"features have shape {features.shape}, layer {layer} expects {expected} channels"
            )
        factor = self.downsample_factor(layer)
        x = features[:, :, :3].astype(np.float32, copy=False)
        offset = 3
        levels = []
        for step in reversed(range(layer - 1)):
            pack = factor // 2 ** (step + 1)
            width = 9 * pack * pack
            levels.append((step, pack, features[:, :, offset : offset + width]))
            offset += width
        for step, pack, packed in sorted(levels, key=lambda t: -t[0]):
            detail = _depth_to_space(packed.astype(np.float32, copy=False), pack, 9)
            x = _merge(x, detail)
        return x
