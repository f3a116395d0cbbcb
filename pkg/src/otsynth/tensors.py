"""Dense numeric containers and reshaping between feature grids and sample matrices.

Conventions used across the whole engine:

* ``ImageRGB``   — float32 ndarray of shape ``(height, width, 3)``, values
  nominally in [0, 1].  Out-of-gamut values are preserved mid-pipeline and
  clamped only when an image is exported.
* ``FeatureTensor`` — float32 ndarray of shape ``(height, width, channels)``.
* ``SampleMatrix``  — float32 ndarray of shape ``(samples, dims)``; row k is
  the channel vector of spatial index k in row-major order.

Everything is row-major and 32-bit float.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

from .errors import DimensionError

DTYPE = np.float32


def as_tensor(data, height: int, width: int, channels: int) -> np.ndarray:
    """Build a feature tensor from flat data, validating the length."""
    arr = np.asarray(data, dtype=DTYPE)
    if arr.size != height * width * channels:
        raise DimensionError(
            f"data length {arr.size} != {height}x{width}x{channels}"
        )
    return arr.reshape(height, width, channels)


def flatten(t: np.ndarray) -> np.ndarray:
    """Feature tensor (H, W, C) -> sample matrix (H*W, C); reshape only."""
    if t.ndim != 3:
        raise DimensionError(f"expected a 3-d feature tensor, got shape {t.shape}")
    h, w, c = t.shape
    return t.reshape(h * w, c)


def unflatten(m: np.ndarray, height: int, width: int) -> np.ndarray:
    """Inverse of :func:`flatten`."""
    if m.ndim != 2:
        raise DimensionError(f"expected a 2-d sample matrix, got shape {m.shape}")
    if m.shape[0] != height * width:
        raise DimensionError(
            f"sample count {m.shape[0]} does not fill a {height}x{width} grid"
        )
    return m.reshape(height, width, m.shape[1])


def image_to_tensor(img: np.ndarray) -> np.ndarray:
    """View an RGB image as a 3-channel feature tensor."""
    if img.ndim != 3 or img.shape[2] != 3:
        raise DimensionError(f"expected (H, W, 3) image, got shape {img.shape}")
    return np.asarray(img, dtype=DTYPE)


def tensor_to_image(t: np.ndarray) -> np.ndarray:
    """3-channel feature tensor -> RGB image, clamped to [0, 1]."""
    if t.ndim != 3 or t.shape[2] != 3:
        raise DimensionError(f"expected (H, W, 3) tensor, got shape {t.shape}")
    return np.clip(t, 0.0, 1.0).astype(DTYPE)


def read_png(path) -> np.ndarray:
    """Load an 8-bit PNG as a float32 RGB image, bytes mapped linearly by v/255."""
    with Image.open(path) as im:
        rgb = im.convert("RGB")
        arr = np.asarray(rgb, dtype=DTYPE) / DTYPE(255.0)
    return arr


def write_png(path, img: np.ndarray) -> None:
    """Export an RGB image to 8-bit PNG; values are clamped then scaled by 255."""
    if img.ndim != 3 or img.shape[2] != 3:
        raise DimensionError(f"expected (H, W, 3) image, got shape {img.shape}")
    data = np.clip(img, 0.0, 1.0) * 255.0
    Image.fromarray(np.rint(data).astype(np.uint8), mode="RGB").save(path, format="PNG")


def read_mask_png(path) -> np.ndarray:
    """Load a single-channel 8-bit PNG; each distinct byte value is an ID."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"), dtype=np.uint8)
    return arr
