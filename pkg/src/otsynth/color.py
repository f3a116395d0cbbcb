"""Color transfer: HSL luminance anchoring plus transport on raw RGB.

The combined transfer first rebuilds the stylized image with the content's
hue and saturation, then runs the transport loop directly on three-channel
RGB values — the content image acts as the color source and the
luminance-anchored image as the content anchor.
"""

from __future__ import annotations

import numpy as np

from . import rng as rng_mod
from .errors import DimensionError
from .pipeline import SynthesisConfig
from .slicedot import OtParams, optimal_transport
from .tensors import DTYPE, flatten, unflatten


def rgb_to_hsl(rgb: np.ndarray) -> np.ndarray:
    """Bi-hexcone RGB -> HSL; hue in degrees [0, 360), achromatic hue = 0."""
    rgb = np.clip(np.asarray(rgb, dtype=np.float64), 0.0, 1.0)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    cmax = rgb.max(axis=-1)
    cmin = rgb.min(axis=-1)
    delta = cmax - cmin
    light = (cmax + cmin) / 2.0
    sat = np.zeros_like(light)
    chroma = delta > 0
    denom = 1.0 - np.abs(2.0 * light - 1.0)
    np.divide(delta, denom, out=sat, where=chroma & (denom > 0))
    hue = np.zeros_like(light)
    with np.errstate(invalid="ignore", divide="ignore"):
        hr = np.mod((g - b) / delta, 6.0)
        hg = (b - r) / delta + 2.0
        hb = (r - g) / delta + 4.0
    hue = np.where(chroma & (cmax == r), hr, hue)
    hue = np.where(chroma & (cmax == g) & (cmax != r), hg, hue)
    hue = np.where(chroma & (cmax == b) & (cmax != r) & (cmax != g), hb, hue)
    hue = np.where(chroma, hue * 60.0, 0.0)
    return np.stack([hue, np.clip(sat, 0.0, 1.0), light], axis=-1)


def hsl_to_rgb(hsl: np.ndarray) -> np.ndarray:
    hsl = np.asarray(hsl, dtype=np.float64)
    h = np.mod(hsl[..., 0], 360.0)
    s = np.clip(hsl[..., 1], 0.0, 1.0)
    light = np.clip(hsl[..., 2], 0.0, 1.0)
    chroma = (1.0 - np.abs(2.0 * light - 1.0)) * s
    hp = h / 60.0
    x = chroma * (1.0 - np.abs(np.mod(hp, 2.0) - 1.0))
    zeros = np.zeros_like(chroma)
    sector = np.floor(hp).astype(np.int64) % 6
    r1 = np.choose(sector, [chroma, x, zeros, zeros, x, chroma])
    g1 = np.choose(sector, [x, chroma, chroma, x, zeros, zeros])
    b1 = np.choose(sector, [zeros, zeros, x, chroma, chroma, x])
    m = light - chroma / 2.0
    return np.stack([r1 + m, g1 + m, b1 + m], axis=-1).astype(DTYPE)


def luminance_transfer(content: np.ndarray, stylized: np.ndarray) -> np.ndarray:
    """Hue and saturation from the content, lightness from the stylized image."""
    if content.shape != stylized.shape:
        raise DimensionError(f"shape mismatch: {content.shape} vs {stylized.shape}")
    hsl_content = rgb_to_hsl(content)
    hsl_styl = rgb_to_hsl(stylized)
    combined = np.concatenate([hsl_content[..., :2], hsl_styl[..., 2:]], axis=-1)
    return hsl_to_rgb(combined)


def rgb_transport(
    moving: np.ndarray,
    source: np.ndarray,
    anchor: np.ndarray | None,
    cfg: SynthesisConfig,
    strength: float,
) -> np.ndarray:
    """Transport loop on raw RGB pixel distributions.

    ``moving`` starts the optimization, ``source`` supplies the target color
    statistics, and ``anchor`` (when given) is blended in once per slice
    with the given strength.
    """
    h, w = moving.shape[:2]
    o = flatten(moving.astype(DTYPE, copy=False))
    s = flatten(source.astype(DTYPE, copy=False))
    c = None
    if anchor is not None and strength > 0.0:
        if anchor.shape != moving.shape:
            raise DimensionError(f"anchor shape {anchor.shape} != {moving.shape}")
        # No mean alignment here: anchor colors are absolute values that
        # must survive a full-strength blend unchanged.
        c = flatten(anchor.astype(DTYPE, copy=False))
    params = OtParams(
        global_passes=cfg.global_passes, bins=cfg.bins, seed=cfg.seed, content_strength=strength
    )
    for gp in range(cfg.global_passes):
        gen = rng_mod.derive(cfg.seed, rng_mod.TRANSPORT, 0, gp, 0)
        o = optimal_transport(o, s, cfg.global_passes, params, gen, content=c)
    return unflatten(o, h, w)


def color_transfer_global(stylized: np.ndarray, content: np.ndarray, cfg: SynthesisConfig) -> np.ndarray:
    """Transport the stylized image's RGB distribution onto the content's."""
    if stylized.shape != content.shape:
        raise DimensionError(f"shape mismatch: {stylized.shape} vs {content.shape}")
    return rgb_transport(stylized, content, None, cfg, 0.0)


def color_transfer_combined(stylized: np.ndarray, content: np.ndarray, cfg: SynthesisConfig) -> np.ndarray:
    """Global color statistics of the content, anchored to local regions.

    The luminance-anchored image plays the content role so the transported
    colors stay attached to the structures they belong to.
    """
    if stylized.shape != content.shape:
        raise DimensionError(f"shape mismatch: {stylized.shape} vs {content.shape}")
    anchor = luminance_transfer(content, stylized)
    return rgb_transport(stylized, content, anchor, cfg, cfg.content_strength)
