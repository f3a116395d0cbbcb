"""Texture mixing: bidirectional transport mappings blended by a random mask.

A mixed target distribution interpolates two exemplars.  Each exemplar is
transported onto the other (A_B and B_A), and a per-pixel binary mask picks
for every sample whether the A-side or B-side interpolation contributes,
keeping reproduction quality symmetric in both textures.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng as rng_mod
from .errors import DimensionError
from .pipeline import (
    SynthesisConfig,
    _LevelProviders,
    build_pyramid,
    default_codec,
    encode_flat,
    fit_content_to_output,
    pad_to_multiple,
    run_level,
    upscale_bicubic,
)
from .pca import fit_pca, from_subspace, to_subspace
from .slicedot import OtParams, optimal_transport
from .tensors import DTYPE


@dataclass
class MixSpec:
    """Two exemplars plus the interpolation ratio and per-pixel mixing mask.

    ``mixing_mask`` may be preset (loaded from an image); otherwise it is
    drawn uniformly in (0, 1) from the config seed at synthesis dims.
    """

    texture_a: np.ndarray
    texture_b: np.ndarray
    ratio: float
    mixing_mask: np.ndarray | None = None

    def validate(self) -> None:
        if not 0.0 <= self.ratio <= 1.0:
            raise ValueError(f"ratio must be in [0, 1], got {self.ratio}")


def compute_mapping(a: np.ndarray, b: np.ndarray, cfg: SynthesisConfig, rng: np.random.Generator) -> np.ndarray:
    """Transport mapping of ``a`` onto ``b``; row k of the result is the
    transported row k of ``a``.

    The transport runs inside the joint span of both sample sets (exact up
    to the numerical noise floor): directions orthogonal to the span carry
    no variance in either distribution, so restricting to it changes
    nothing but the cost.
    """
    if a.shape[1] != b.shape[1]:
        raise DimensionError(f"dims mismatch: {a.shape[1]} vs {b.shape[1]}")
    params = OtParams(global_passes=cfg.global_passes, bins=cfg.bins, seed=cfg.seed)
    joint = np.concatenate([a, b], axis=0)
    basis = fit_pca(joint, 1.0) if joint.shape[0] >= 2 else None
    if basis is not None and basis.kept_dims < a.shape[1]:
        out = to_subspace(basis, a)
        b_sub = to_subspace(basis, b)
    else:
        basis = None
        out = a
        b_sub = b
    for _ in range(cfg.global_passes):
        out = optimal_transport(out, b_sub, cfg.global_passes, params, rng)
    return from_subspace(basis, out) if basis is not None else out


def mix_distributions(
    a: np.ndarray,
    a_b: np.ndarray,
    b: np.ndarray,
    b_a: np.ndarray,
    ratio: float,
    mixing_mask: np.ndarray,
) -> np.ndarray:
    """Assemble the mixed target: ``ceil(mask - ratio)`` picks the branch.

    Rows where the mask exceeds the ratio take the A-side interpolation
    ``A*(1-i) + A_B*i``; the rest take ``B_A*(1-i) + B*i``.
    """
    if a.shape != a_b.shape:
        raise DimensionError(f"A and A_B shapes differ: {a.shape} vs {a_b.shape}")
    if b.shape != b_a.shape:
        raise DimensionError(f"B and B_A shapes differ: {b.shape} vs {b_a.shape}")
    if a.shape != b.shape:
        raise DimensionError(f"A-side and B-side shapes differ: {a.shape} vs {b.shape}")
    mask = np.asarray(mixing_mask).reshape(-1)
    if mask.size != a.shape[0]:
        raise DimensionError(f"mask length {mask.size} != row count {a.shape[0]}")
    if not 0.0 <= ratio <= 1.0:
        raise ValueError(f"ratio must be in [0, 1], got {ratio}")
    mix = np.clip(np.ceil(mask - ratio), 0.0, 1.0).astype(a.dtype)[:, None]
    i = a.dtype.type(ratio)
    a_blend = a * (1 - i) + a_b * i
    b_blend = b_a * (1 - i) + b * i
    return a_blend * mix + b_blend * (1 - mix)


def _mask_at_feature_grid(mask: np.ndarray, factor: int) -> np.ndarray:
    """Decimate the padded mask by value so assignments agree across layers."""
    padded, _ = pad_to_multiple(mask[:, :, None])
    return padded[::factor, ::factor, 0].reshape(-1)


def make_mixture_providers(codec, spec: MixSpec, mask: np.ndarray, cfg: SynthesisConfig, level: int) -> _LevelProviders:
    cache: dict[int, np.ndarray] = {}

    def target(layer: int) -> np.ndarray:
        if layer not in cache:
            a = encode_flat(codec, spec.texture_a, layer)[0]
            b = encode_flat(codec, spec.texture_b, layer)[0]
            a_b = compute_mapping(a, b, cfg, rng_mod.derive(cfg.seed, rng_mod.MAPPING, level, layer, 0))
            b_a = compute_mapping(b, a, cfg, rng_mod.derive(cfg.seed, rng_mod.MAPPING, level, layer, 1))
            mask_l = _mask_at_feature_grid(mask, codec.downsample_factor(layer))
            cache[layer] = mix_distributions(a, a_b, b, b_a, spec.ratio, mask_l).astype(DTYPE)
        return cache[layer]

    return _LevelProviders(target=target)


def synthesize_mixture(spec: MixSpec, cfg: SynthesisConfig, codec=None, trace=None) -> np.ndarray:
    """Texture synthesis against a per-layer mixed target distribution."""
    spec.validate()
    cfg.validate()
    if codec is None:
        codec = default_codec(cfg)
    # Both exemplars are resampled to the synthesis dims so their feature
    # grids align row for row with the mixing mask.
    tex_a = fit_content_to_output(spec.texture_a, cfg.output_width, cfg.output_height)
    tex_b = fit_content_to_output(spec.texture_b, cfg.output_width, cfg.output_height)
    if spec.mixing_mask is not None:
        mask_full = np.asarray(spec.mixing_mask, dtype=DTYPE)
        if mask_full.shape != (cfg.output_height, cfg.output_width):
            raise DimensionError(
                f"mixing mask shape {mask_full.shape} != synthesis dims "
                f"({cfg.output_height}, {cfg.output_width})"
            )
    else:
        gen = rng_mod.derive(cfg.seed, rng_mod.MIXING_MASK)
        mask_full = gen.random((cfg.output_height, cfg.output_width), dtype=DTYPE)
        # Open interval keeps the ratio-endpoint identities exact.
        mask_full = np.maximum(mask_full, np.finfo(DTYPE).tiny)
    pyr_a = build_pyramid(tex_a, tex_b, cfg.output_width, cfg.output_height, cfg.min_pyramid_size)
    gen = rng_mod.derive(cfg.seed, rng_mod.INIT_NOISE)
    output = gen.random((pyr_a[0].height, pyr_a[0].width, 3), dtype=DTYPE)
    for i, level in enumerate(pyr_a):
        level_spec = MixSpec(
            texture_a=level.style_image,
            texture_b=level.content_image,
            ratio=spec.ratio,
        )
        stride = 1 << (len(pyr_a) - 1 - i)
        mask_level = mask_full[::stride, ::stride][: level.height, : level.width]
        providers = make_mixture_providers(codec, level_spec, mask_level, cfg, i)
        output = run_level(output, cfg, codec, i, providers, trace)
        if i + 1 < len(pyr_a):
            nxt = pyr_a[i + 1]
            output = upscale_bicubic(output, nxt.width, nxt.height)
    return output
