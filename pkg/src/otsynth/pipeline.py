"""Synthesis orchestration: auto-encoder loops over layers and pyramid levels.

Each global pass visits layers 5..1; every visit encodes the working image,
transports its feature distribution onto the target's, and decodes back.
Multiresolution synthesis repeats the whole process coarse-to-fine over an
image pyramid, upscaling the result between levels.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import rng as rng_mod
from .codec.bands import PyramidCodec
from .errors import DimensionError, NumericError
from .pca import fit_pca, from_subspace, to_subspace
from .slicedot import OtParams, align_mean, optimal_transport
from .tensors import DTYPE, flatten, unflatten

LAYER_ORDER = (5, 4, 3, 2, 1)

# Layers receiving the content blend in style mode, with the divisor applied
# to the user strength at each.
CONTENT_SCHEDULE = {5: 1.0, 4: 2.0, 3: 4.0}

# Codec inputs are reflection-padded to this multiple and cropped after
# decoding, so arbitrary image sizes survive five pooling stages.
PAD_MULTIPLE = 16


@dataclass
class SynthesisConfig:
    mode: str = "texture"
    output_width: int = 256
    output_height: int = 256
    global_passes: int = 5
    bins: int = 128
    content_strength: float = 0.0
    use_pca: bool = True
    pca_threshold: float = 0.9
    min_pyramid_size: int = 256
    seed: int = 0
    codec: str = "pyramid"

    def validate(self) -> None:
        if self.mode not in ("texture", "style"):
            raise ValueError(f"mode must be 'texture' or 'style', got {self.mode!r}")
        if min(self.output_width, self.output_height) < PAD_MULTIPLE:
            raise ValueError(f"output dims must be at least {PAD_MULTIPLE}")
        if self.global_passes < 1:
            raise ValueError("global_passes must be >= 1")
        if self.bins < 1:
            raise ValueError("bins must be >= 1")
        if not 0.0 <= self.content_strength <= 1.0:
            raise ValueError("content_strength must be in [0, 1]")
        if self.mode == "texture" and self.content_strength != 0.0:
            raise ValueError("content_strength must be 0 in texture mode")
        if not 0.0 < self.pca_threshold <= 1.0:
            raise ValueError("pca_threshold must be in (0, 1]")
        if self.min_pyramid_size < 1:
            raise ValueError("min_pyramid_size must be >= 1")


@dataclass
class PyramidLevel:
    """One level of the synthesis pyramid; index 0 is the coarsest."""

    level_index: int
    width: int
    height: int
    style_image: np.ndarray
    content_image: np.ndarray | None = None


def resize_area(img: np.ndarray, new_height: int, new_width: int) -> np.ndarray:
    """Box-filter resampling: each output pixel averages its source footprint."""
    out = _area_axis(img.astype(np.float64, copy=False), new_height, axis=0)
    out = _area_axis(out, new_width, axis=1)
    return out.astype(DTYPE)


def _area_axis(x: np.ndarray, new_n: int, axis: int) -> np.ndarray:
    x = np.moveaxis(x, axis, 0)
    n = x.shape[0]
    if n == new_n:
        return np.moveaxis(x, 0, axis)
    scale = n / new_n
    cum = np.concatenate([np.zeros((1,) + x.shape[1:]), np.cumsum(x, axis=0)], axis=0)
    pos = np.arange(new_n + 1) * scale
    idx = np.clip(np.floor(pos).astype(np.int64), 0, n)
    frac = pos - idx
    value_idx = np.minimum(idx, n - 1)
    integral = cum[idx] + frac.reshape((-1,) + (1,) * (x.ndim - 1)) * x[value_idx]
    out = (integral[1:] - integral[:-1]) / scale
    return np.moveaxis(out, 0, axis)


def _catmull_rom(t: np.ndarray) -> np.ndarray:
    """Kernel weights for the four taps around fractional positions ``t``."""
    a = -0.5
    x = np.stack([t + 1.0, t, 1.0 - t, 2.0 - t], axis=1)
    near = (a + 2.0) * x**3 - (a + 3.0) * x**2 + 1.0
    far = a * x**3 - 5.0 * a * x**2 + 8.0 * a * x - 4.0 * a
    return np.where(x <= 1.0, near, far)


def upscale_bicubic(img: np.ndarray, new_width: int, new_height: int) -> np.ndarray:
    """Catmull-Rom separable upscaling with edge clamping."""
    h, w = img.shape[:2]
    if new_height < h or new_width < w:
        raise DimensionError(f"upscale target {new_height}x{new_width} smaller than {h}x{w}")
    out = _bicubic_axis(img.astype(np.float64, copy=False), new_height, axis=0)
    out = _bicubic_axis(out, new_width, axis=1)
    return out.astype(DTYPE)


def _bicubic_axis(x: np.ndarray, new_n: int, axis: int) -> np.ndarray:
    x = np.moveaxis(x, axis, 0)
    n = x.shape[0]
    if n == new_n:
        return np.moveaxis(x, 0, axis)
    src = (np.arange(new_n) + 0.5) * (n / new_n) - 0.5
    base = np.floor(src)
    t = src - base
    weights = _catmull_rom(t)
    taps = base[:, None] + np.array([-1, 0, 1, 2])[None, :]
    taps = np.clip(taps, 0, n - 1).astype(np.int64)
    gathered = x[taps]  # (new_n, 4, ...)
    out = np.einsum("ij,ij...->i...", weights, gathered)
    return np.moveaxis(out, 0, axis)


def build_pyramid(
    style: np.ndarray,
    content: np.ndarray | None,
    target_width: int,
    target_height: int,
    min_size: int,
) -> list[PyramidLevel]:
    """Coarse-to-fine pyramid; halving stops once any image in the set would
    no longer exceed ``min_size`` in both dimensions."""
    dims = [(target_height, target_width), style.shape[:2]]
    if content is not None:
        dims.append(content.shape[:2])
    halvings = 0
    while all(min(h >> halvings, w >> halvings) > min_size for h, w in dims):
        halvings += 1
    levels = []
    for index in range(halvings + 1):
        shift = halvings - index
        lw = target_width >> shift
        lh = target_height >> shift
        s = style if shift == 0 else resize_area(style, style.shape[0] >> shift, style.shape[1] >> shift)
        c = None
        if content is not None:
            c = content if shift == 0 else resize_area(content, content.shape[0] >> shift, content.shape[1] >> shift)
        levels.append(PyramidLevel(level_index=index, width=lw, height=lh, style_image=s, content_image=c))
    return levels


def pad_to_multiple(img: np.ndarray, multiple: int = PAD_MULTIPLE):
    """Center reflect-pad H and W up to the next multiple; returns (padded, crop)."""
    h, w = img.shape[:2]
    ph = (-h) % multiple
    pw = (-w) % multiple
    top, left = ph // 2, pw // 2
    if ph == 0 and pw == 0:
        return img, (0, h, 0, w)
    padded = np.pad(img, ((top, ph - top), (left, pw - left), (0, 0)), mode="reflect")
    return padded, (top, h, left, w)


def crop_back(img: np.ndarray, crop) -> np.ndarray:
    top, h, left, w = crop
    return img[top : top + h, left : left + w]


def encode_flat(codec, img: np.ndarray, layer: int):
    """Pad, encode, flatten; returns (matrix, feature_h, feature_w, crop)."""
    padded, crop = pad_to_multiple(img)
    feat = codec.encode(padded, layer)
    if not np.all(np.isfinite(feat)):
        raise NumericError(f"non-finite features at layer {layer}")
    fh, fw = feat.shape[:2]
    return flatten(feat), fh, fw, crop


@dataclass
class _LevelProviders:
    """Feature suppliers that specialize the level loop per application.

    ``target`` yields the (cached) target distribution for a layer;
    ``content`` yields the aligned-grid content distribution or None;
    ``pre_transport`` may adjust the working distribution before each
    transport call (full feature space, before any subspace projection).
    """

    target: Callable[[int], np.ndarray]
    content: Callable[[int], np.ndarray | None] = lambda layer: None
    pre_transport: Callable[[np.ndarray, int], np.ndarray] | None = None


def run_level(
    init: np.ndarray,
    cfg: SynthesisConfig,
    codec,
    level: int,
    providers: _LevelProviders,
    trace: Callable | None = None,
) -> np.ndarray:
    """Run all global passes of the layer loop at one pyramid level."""
    output = init.astype(DTYPE, copy=False)
    pca_cache: dict[int, object] = {}
    for gp in range(cfg.global_passes):
        for layer in LAYER_ORDER:
            s = providers.target(layer)
            o, fh, fw, crop = encode_flat(codec, output, layer)
            strength = 0.0
            c = None
            if cfg.mode == "style" and layer in CONTENT_SCHEDULE and cfg.content_strength > 0.0:
                strength = cfg.content_strength / CONTENT_SCHEDULE[layer]
                c = providers.content(layer)
            if providers.pre_transport is not None:
                o = providers.pre_transport(o, layer)
            if s.shape[0] == 1:
                # Point-mass target: transport collapses every sample onto
                # the single target row; no slicing needed.
                if trace is not None:
                    trace("layer", level=level, global_pass=gp, layer=layer, dims=s.shape[1], slices=0)
                o = np.broadcast_to(s[0], o.shape).astype(DTYPE)
                decoded = codec.decode(unflatten(o.copy(), fh, fw), layer)
                output = crop_back(decoded, crop)
                continue
            if cfg.use_pca and s.shape[0] >= 2:
                basis = pca_cache.get(layer)
                if basis is None:
                    basis = fit_pca(s, cfg.pca_threshold)
                    pca_cache[layer] = basis
                s_w = to_subspace(basis, s)
                o_w = to_subspace(basis, o)
                c_w = to_subspace(basis, c) if c is not None else None
            else:
                basis = None
                s_w, o_w, c_w = s, o, c
            if c_w is not None:
                c_w = align_mean(c_w, s_w)
            params = OtParams(
                global_passes=cfg.global_passes,
                bins=cfg.bins,
                seed=cfg.seed,
                content_strength=strength,
            )
            gen = rng_mod.derive(cfg.seed, rng_mod.TRANSPORT, level, gp, layer)
            if trace is not None:
                trace(
                    "layer",
                    level=level,
                    global_pass=gp,
                    layer=layer,
                    dims=s_w.shape[1],
                    slices=max(1, s_w.shape[1] // cfg.global_passes),
                )
            o_w = optimal_transport(
                o_w, s_w, cfg.global_passes, params, gen, content=c_w if strength > 0.0 else None
            )
            o = from_subspace(basis, o_w) if basis is not None else o_w
            decoded = codec.decode(unflatten(o.astype(DTYPE), fh, fw), layer)
            output = crop_back(decoded, crop)
    return output


def make_style_providers(codec, style_img: np.ndarray, content_img: np.ndarray | None) -> _LevelProviders:
    target_cache: dict[int, np.ndarray] = {}
    content_cache: dict[int, np.ndarray] = {}

    def target(layer: int) -> np.ndarray:
        if layer not in target_cache:
            target_cache[layer] = encode_flat(codec, style_img, layer)[0]
        return target_cache[layer]

    def content(layer: int) -> np.ndarray | None:
        if content_img is None:
            return None
        if layer not in content_cache:
            content_cache[layer] = encode_flat(codec, content_img, layer)[0]
        return content_cache[layer]

    return _LevelProviders(target=target, content=content)


def synthesize_level(
    style: np.ndarray,
    content: np.ndarray | None,
    init: np.ndarray,
    cfg: SynthesisConfig,
    codec,
    level: int = 0,
    trace: Callable | None = None,
) -> np.ndarray:
    """One pyramid level of texture synthesis or style transfer."""
    return run_level(init, cfg, codec, level, make_style_providers(codec, style, content), trace)


def default_codec(cfg: SynthesisConfig):
    if cfg.codec == "pyramid":
        return PyramidCodec()
    raise ValueError("the VGG codec needs a weight archive; construct it explicitly")


def fit_content_to_output(content: np.ndarray, width: int, height: int) -> np.ndarray:
    """Resize the content image to the synthesis dims (box down / bicubic up)."""
    h, w = content.shape[:2]
    if (h, w) == (height, width):
        return content
    if height <= h and width <= w:
        return resize_area(content, height, width)
    mid = content
    if height < h or width < w:
        mid = resize_area(content, min(h, height), min(w, width))
    return upscale_bicubic(mid, width, height)


def synthesize(
    style: np.ndarray,
    content: np.ndarray | None,
    cfg: SynthesisConfig,
    codec=None,
    trace: Callable | None = None,
) -> np.ndarray:
    """Full multiresolution synthesis; returns the finest-level output."""
    cfg.validate()
    if cfg.mode == "style" and content is None:
        raise ValueError("style mode requires a content image")
    if codec is None:
        codec = default_codec(cfg)
    if content is not None:
        content = fit_content_to_output(content, cfg.output_width, cfg.output_height)
    levels = build_pyramid(style, content, cfg.output_width, cfg.output_height, cfg.min_pyramid_size)
    coarsest = levels[0]
    if cfg.mode == "style":
        output = coarsest.content_image
    else:
        gen = rng_mod.derive(cfg.seed, rng_mod.INIT_NOISE)
        output = gen.random((coarsest.height, coarsest.width, 3), dtype=DTYPE)
    for i, level in enumerate(levels):
        output = synthesize_level(
            level.style_image, level.content_image, output, cfg, codec, level=i, trace=trace
        )
        if i + 1 < len(levels):
            nxt = levels[i + 1]
            output = upscale_bicubic(output, nxt.width, nxt.height)
    return output
