"""Mask-guided painting: histogram re-balancing and per-ID mean re-weighting.

Texture-ID masks over the exemplar and the target steer synthesis: the
target distribution is re-sampled so its ID histogram matches the target
mask's, and before every transport call the working distribution's per-ID
means are shifted onto the corresponding exemplar means.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng as rng_mod
from .errors import DimensionError, UnmatchableIdError
from .pipeline import (
    SynthesisConfig,
    _LevelProviders,
    build_pyramid,
    default_codec,
    encode_flat,
    pad_to_multiple,
    run_level,
    upscale_bicubic,
)
from .tensors import DTYPE


@dataclass
class GuidanceMasks:
    """Per-pixel texture IDs over the exemplar and over the synthesis target."""

    style_mask: np.ndarray
    content_mask: np.ndarray

    def validate(self) -> None:
        style_ids = set(np.unique(self.style_mask).tolist())
        content_ids = set(np.unique(self.content_mask).tolist())
        orphans = content_ids - style_ids
        if orphans:
            raise UnmatchableIdError(f"content mask IDs missing from style mask: {sorted(orphans)}")

    @property
    def id_set(self) -> list[int]:
        return sorted(set(np.unique(self.style_mask).tolist()) | set(np.unique(self.content_mask).tolist()))


def rebalance_target(
    s: np.ndarray, s_ids: np.ndarray, desired: dict[int, int], rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Re-sample rows of ``s`` so per-ID counts exactly match ``desired``.

    Rows are kept or duplicated uniformly at random within each ID; kept
    rows stay in their original order and surviving rows are copied
    bitwise.  When the desired histogram equals the current one the result
    is an identity copy.
    """
    s_ids = np.asarray(s_ids).reshape(-1)
    if s_ids.size != s.shape[0]:
        raise DimensionError(f"ID count {s_ids.size} != row count {s.shape[0]}")
    if not desired or sum(desired.values()) <= 0:
        raise ValueError("desired histogram must have a positive total")
    present = {int(v) for v in np.unique(s_ids)}
    absent = [g for g in desired if g not in present]
    if absent:
        raise UnmatchableIdError(f"desired histogram references absent IDs: {sorted(absent)}")
    kept: list[np.ndarray] = []
    extra: list[np.ndarray] = []
    for g in sorted(desired):
        want = int(desired[g])
        rows = np.flatnonzero(s_ids == g)
        gen = rng.spawn(1)[0]
        if want <= rows.size:
            chosen = rows if want == rows.size else np.sort(gen.choice(rows, size=want, replace=False))
            kept.append(chosen)
        else:
            kept.append(rows)
            extra.append(gen.choice(rows, size=want - rows.size, replace=True))
    keep_idx = np.sort(np.concatenate(kept)) if kept else np.empty(0, dtype=np.int64)
    index = np.concatenate([keep_idx] + extra) if extra else keep_idx
    return s[index], s_ids[index]


def reweight_output(o: np.ndarray, o_ids: np.ndarray, s: np.ndarray, s_ids: np.ndarray) -> np.ndarray:
    """Shift each ID group of ``o`` so its mean matches the same group in ``s``."""
    o_ids = np.asarray(o_ids).reshape(-1)
    s_ids = np.asarray(s_ids).reshape(-1)
    if o_ids.size != o.shape[0]:
        raise DimensionError(f"ID count {o_ids.size} != row count {o.shape[0]}")
    if s_ids.size != s.shape[0]:
        raise DimensionError(f"ID count {s_ids.size} != row count {s.shape[0]}")
    out = o.copy()
    s_present = set(np.unique(s_ids).tolist())
    for g in np.unique(o_ids):
        if g not in s_present:
            raise UnmatchableIdError(f"ID {int(g)} absent from the target distribution")
        rows = o_ids == g
        shift = s[s_ids == g].mean(axis=0, dtype=np.float64) - o[rows].mean(axis=0, dtype=np.float64)
        out[rows] = o[rows] + shift.astype(o.dtype)
    return out


def downsample_ids(mask: np.ndarray, factor: int) -> np.ndarray:
    """Majority vote over factor x factor blocks, ties to the smallest ID."""
    mask = np.asarray(mask)
    if factor == 1:
        return mask
    h, w = mask.shape
    if h % factor or w % factor:
        raise DimensionError(f"mask {h}x{w} not divisible by block factor {factor}")
    blocks = mask.reshape(h // factor, factor, w // factor, factor).transpose(0, 2, 1, 3)
    blocks = blocks.reshape(h // factor, w // factor, factor * factor)
    ids = np.unique(mask)
    counts = np.stack([(blocks == g).sum(axis=2) for g in ids], axis=2)
    # argmax takes the first maximum, and ids are sorted, so ties resolve
    # to the smallest ID.
    return ids[np.argmax(counts, axis=2)]


def _mask_to_feature_ids(mask: np.ndarray, factor: int) -> np.ndarray:
    """IDs aligned with the codec's feature rows: pad like the image, vote."""
    padded, _ = pad_to_multiple(np.asarray(mask)[:, :, None])
    return downsample_ids(padded[:, :, 0], factor).reshape(-1)


def make_guided_providers(
    codec, style_img: np.ndarray, masks: GuidanceMasks, cfg: SynthesisConfig, level: int
) -> _LevelProviders:
    cache: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}

    def grids(layer: int):
        if layer not in cache:
            factor = codec.downsample_factor(layer)
            s = encode_flat(codec, style_img, layer)[0]
            style_ids = _mask_to_feature_ids(masks.style_mask, factor)
            content_ids = _mask_to_feature_ids(masks.content_mask, factor)
            values, counts = np.unique(content_ids, return_counts=True)
            desired = {int(v): int(c) for v, c in zip(values, counts)}
            if set(desired) - {int(v) for v in np.unique(style_ids)}:
                # Majority voting erased a demanded ID from this coarse
                # grid; guidance degrades to plain synthesis at this layer.
                cache[layer] = (s.astype(DTYPE), None, None)
            else:
                gen = rng_mod.derive(cfg.seed, rng_mod.REBALANCE, level, layer)
                s_bal, ids_bal = rebalance_target(s, style_ids, desired, gen)
                cache[layer] = (s_bal.astype(DTYPE), ids_bal, content_ids)
        return cache[layer]

    def target(layer: int) -> np.ndarray:
        return grids(layer)[0]

    def pre_transport(o: np.ndarray, layer: int) -> np.ndarray:
        s_bal, ids_bal, content_ids = grids(layer)
        if ids_bal is None:
            return o
        return reweight_output(o, content_ids, s_bal, ids_bal)

    return _LevelProviders(target=target, pre_transport=pre_transport)


def guided_synthesize(
    style: np.ndarray, masks: GuidanceMasks, cfg: SynthesisConfig, codec=None, trace=None
) -> np.ndarray:
    """Texture synthesis steered by style/content ID masks."""
    cfg.validate()
    masks.validate()
    if cfg.mode != "texture" or cfg.content_strength != 0.0:
        raise ValueError("guided painting runs in texture mode with content_strength 0")
    if masks.style_mask.shape != style.shape[:2]:
        raise DimensionError(
            f"style mask shape {masks.style_mask.shape} != style image dims {style.shape[:2]}"
        )
    if masks.content_mask.shape != (cfg.output_height, cfg.output_width):
        raise DimensionError(
            f"content mask shape {masks.content_mask.shape} != synthesis dims "
            f"({cfg.output_height}, {cfg.output_width})"
        )
    if codec is None:
        codec = default_codec(cfg)
    levels = build_pyramid(style, None, cfg.output_width, cfg.output_height, cfg.min_pyramid_size)
    gen = rng_mod.derive(cfg.seed, rng_mod.INIT_NOISE)
    output = gen.random((levels[0].height, levels[0].width, 3), dtype=DTYPE)
    n = len(levels)
    for i, level in enumerate(levels):
        stride = 1 << (n - 1 - i)
        level_masks = GuidanceMasks(
            style_mask=masks.style_mask[::stride, ::stride][: level.style_image.shape[0], : level.style_image.shape[1]],
            content_mask=masks.content_mask[::stride, ::stride][: level.height, : level.width],
        )
        providers = make_guided_providers(codec, level.style_image, level_masks, cfg, i)
        output = run_level(output, cfg, codec, i, providers, trace)
        if i + 1 < len(levels):
            nxt = levels[i + 1]
            output = upscale_bicubic(output, nxt.width, nxt.height)
    return output
