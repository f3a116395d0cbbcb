"""Sliced N-dimensional PDF transfer.

A "slice" is one random rotation of the feature distribution followed by an
independent histogram match of every rotated dimension onto the target's.
Iterating slices over many random orthonormal bases transports the working
distribution onto the target while matching interdependence between
dimensions.  The content blend used by style transfer interleaves with the
slice loop.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DimensionError, EmptyDistributionError
from .histmatch import DEFAULT_BINS, match_core

DEFAULT_GLOBAL_PASSES = 5


@dataclass
class OtParams:
    """Knobs of the transport loop.

    ``content_strength`` = 0 disables content matching entirely; the blend
    runs once per slice iteration otherwise.
    """

    global_passes: int = DEFAULT_GLOBAL_PASSES
    bins: int = DEFAULT_BINS
    seed: int = 0
    content_strength: float = 0.0

    def __post_init__(self):
        if self.global_passes < 1:
            raise ValueError(f"global_passes must be >= 1, got {self.global_passes}")
        if self.bins < 1:
            raise ValueError(f"bins must be >= 1, got {self.bins}")
        if not 0.0 <= self.content_strength <= 1.0:
            raise ValueError(f"content_strength must be in [0, 1], got {self.content_strength}")


def random_basis(n: int, rng: np.random.Generator) -> np.ndarray:
    """Random orthonormal n x n basis, deterministically sign-fixed.

    Fills a matrix with i.i.d. standard normals, orthonormalizes it via QR,
    then flips each column so the diagonal entry is non-negative.
    """
    if n < 1:
        raise DimensionError(f"basis dimension must be >= 1, got {n}")
    a = rng.standard_normal((n, n))
    q, _ = np.linalg.qr(a)
    signs = np.where(np.diag(q) < 0.0, -1.0, 1.0)
    return (q * signs).astype(np.float64)


def project(basis: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Rotate every sample row into the basis frame."""
    if m.shape[1] != basis.shape[0]:
        raise DimensionError(f"sample dims {m.shape[1]} != basis dims {basis.shape[0]}")
    return m @ basis.astype(m.dtype, copy=False)


def deproject(basis: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Rotate sample rows back out of the basis frame."""
    if m.shape[1] != basis.shape[0]:
        raise DimensionError(f"sample dims {m.shape[1]} != basis dims {basis.shape[0]}")
    return m @ basis.T.astype(m.dtype, copy=False)


def match_slice(o: np.ndarray, s: np.ndarray, bins: int = DEFAULT_BINS) -> np.ndarray:
    """Match every dimension of ``o`` onto the same dimension of ``s``.

    Columns are matched independently; row order is preserved.
    """
    if o.ndim != 2 or s.ndim != 2:
        raise DimensionError("expected 2-d sample matrices")
    if o.shape[1] != s.shape[1]:
        raise DimensionError(f"dims mismatch: {o.shape[1]} vs {s.shape[1]}")
    if o.shape[0] == 0 or s.shape[0] == 0:
        raise EmptyDistributionError("both distributions must be non-empty")
    o64 = o.astype(np.float64, copy=False)
    s64 = s.astype(np.float64, copy=False)
    # One vectorized stable argsort covers the rank computation for all
    # columns; the binned inverse runs per column.
    order = np.argsort(o64, axis=0, kind="stable")
    ranks = np.empty_like(order)
    np.put_along_axis(ranks, order, np.arange(o.shape[0])[:, None], axis=0)
    lo = o64.min(axis=0)
    hi = o64.max(axis=0)
    out = np.empty_like(o64)
    for d in range(o.shape[1]):
        out[:, d] = match_core(ranks[:, d], lo[d], hi[d], s64[:, d], bins)
    return out.astype(o.dtype, copy=False)


def blend_content(o: np.ndarray, c: np.ndarray, strength: float) -> np.ndarray:
    """Pull ``o`` toward ``c`` by ``strength``, positionally row for row.

    Computed as ``o*(1-strength) + c*strength`` so the endpoints are exact.
    """
    if o.shape != c.shape:
        raise DimensionError(f"shape mismatch: {o.shape} vs {c.shape}")
    if not 0.0 <= strength <= 1.0:
        raise ValueError(f"strength must be in [0, 1], got {strength}")
    t = o.dtype.type(strength)
    return o * (1 - t) + c * t


def align_mean(c: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Shift ``c`` so its per-dimension mean equals that of ``s``."""
    if c.shape[1] != s.shape[1]:
        raise DimensionError(f"dims mismatch: {c.shape[1]} vs {s.shape[1]}")
    shift = s.mean(axis=0, dtype=np.float64) - c.mean(axis=0, dtype=np.float64)
    return (c + shift.astype(c.dtype)).astype(c.dtype, copy=False)


def optimal_transport(
    o: np.ndarray,
    s: np.ndarray,
    passes: int,
    params: OtParams,
    rng: np.random.Generator,
    content: np.ndarray | None = None,
    on_slice: Callable[[np.ndarray], None] | None = None,
) -> np.ndarray:
    """Transport ``o`` onto ``s`` with ``max(1, N // passes)`` slices.

    Each slice draws a fresh random basis, rotates both distributions,
    matches every rotated dimension, rotates back, and (when a content
    matrix is given and the strength is positive) blends toward the content.
    ``s`` is never modified.  ``on_slice`` receives the working matrix after
    each slice; it exists for instrumentation and must not mutate its input.
    """
    if o.shape[1] != s.shape[1]:
        raise DimensionError(f"dims mismatch: {o.shape[1]} vs {s.shape[1]}")
    if passes < 1:
        raise ValueError(f"passes must be >= 1, got {passes}")
    if content is not None and content.shape != o.shape:
        raise DimensionError(f"content shape {content.shape} != {o.shape}")
    if s.shape[0] == 1:
        # A single-row target is a point mass: the first slice already
        # collapses every sample onto it and further slices are no-ops.
        o = np.broadcast_to(s[0], o.shape).astype(o.dtype).copy()
        if content is not None and params.content_strength > 0.0:
            o = blend_content(o, content, params.content_strength)
        if on_slice is not None:
            on_slice(o)
        return o
    n = o.shape[1]
    slice_count = max(1, n // passes)
    children = rng.spawn(slice_count)
    for child in children:
        basis = random_basis(n, child)
        rotated = match_slice(project(basis, o), project(basis, s), params.bins)
        o = deproject(basis, rotated)
        if content is not None and params.content_strength > 0.0:
            o = blend_content(o, content, params.content_strength)
        if on_slice is not None:
            on_slice(o)
    return o


def sliced_wasserstein(a: np.ndarray, b: np.ndarray, slices: int, rng: np.random.Generator) -> float:
    """Average 1-d 2-Wasserstein distance over random unit directions."""
    if a.shape[1] != b.shape[1]:
        raise DimensionError(f"dims mismatch: {a.shape[1]} vs {b.shape[1]}")
    if a.shape[0] != b.shape[0]:
        raise DimensionError(f"sample counts differ: {a.shape[0]} vs {b.shape[0]}")
    dirs = rng.standard_normal((slices, a.shape[1]))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    pa = np.sort(a.astype(np.float64, copy=False) @ dirs.T, axis=0)
    pb = np.sort(b.astype(np.float64, copy=False) @ dirs.T, axis=0)
    w2 = np.sqrt(np.mean((pa - pb) ** 2, axis=0))
    return float(w2.mean())
