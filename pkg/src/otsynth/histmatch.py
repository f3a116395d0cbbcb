"""One-dimensional histogram construction and CDF-based distribution matching.

This is the inner kernel of the sliced transport step: every slice reduces
to matching each projected dimension of the working distribution onto the
corresponding dimension of the target.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, EmptyDistributionError

DEFAULT_BINS = 128


@dataclass
class Histogram1D:
    """Fixed-range histogram with its normalized cumulative distribution.

    ``counts`` has one entry per bin and sums to the number of samples
    tallied.  ``cdf[k]`` is the fraction of samples falling in bins 0..k;
    it is non-decreasing and ends at 1 whenever any sample was tallied.
    """

    bins: int
    range_min: float
    range_max: float
    counts: np.ndarray
    cdf: np.ndarray


def build_histogram(values, bins: int, range_min: float, range_max: float) -> Histogram1D:
    """Tally ``values`` into ``bins`` equal-width bins over the given range.

    A value v lands in bin ``floor((v - range_min) / (range_max - range_min)
    * bins)``, clamped into [0, bins-1].  A degenerate range puts every
    sample in bin 0.
    """
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        raise EmptyDistributionError("cannot build a histogram from no samples")
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    if range_max < range_min:
        raise ValueError(f"range_max {range_max} < range_min {range_min}")
    if range_max == range_min:
        idx = np.zeros(v.size, dtype=np.int64)
    else:
        scaled = (v - range_min) / (range_max - range_min) * bins
        idx = np.clip(np.floor(scaled).astype(np.int64), 0, bins - 1)
    counts = np.bincount(idx, minlength=bins)
    cdf = np.cumsum(counts, dtype=np.float64) / v.size
    return Histogram1D(bins=bins, range_min=float(range_min), range_max=float(range_max), counts=counts, cdf=cdf)


def stable_ranks(values: np.ndarray) -> np.ndarray:
    """0-based ranks of ``values``, ties broken by original index."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=np.int64)
    ranks[order] = np.arange(values.size)
    return ranks


def _inverse_cdf(u: np.ndarray, hist: Histogram1D) -> np.ndarray:
    """Left-continuous inverse of a binned CDF, linear inside each bin."""
    cdf = np.concatenate(([0.0], hist.cdf))
    j = np.searchsorted(cdf, u, side="left")
    j = np.clip(j, 1, hist.bins)
    # searchsorted-left guarantees cdf[j-1] < u <= cdf[j] for u in (0, 1],
    # so the local slope is strictly positive.
    width = (hist.range_max - hist.range_min) / hist.bins
    frac = (u - cdf[j - 1]) / (cdf[j] - cdf[j - 1])
    return hist.range_min + (j - 1 + frac) * width


def match_core(ranks: np.ndarray, src_min: float, src_max: float, target: np.ndarray, bins: int) -> np.ndarray:
    """Shared matching kernel operating on precomputed source ranks.

    Bins the target over the union of both value ranges and reads the
    source's rank quantiles back through the binned inverse CDF.
    """
    t_lo = float(target.min())
    t_hi = float(target.max())
    lo = min(float(src_min), t_lo)
    hi = max(float(src_max), t_hi)
    if hi == lo or t_hi == t_lo:
        # Point-mass target (or two coincident point masses): analytically
        # forced to map everything onto the target's single value.
        return np.full(ranks.size, t_lo)
    hist = build_histogram(target, bins, lo, hi)
    u = (ranks + 0.5) / ranks.size
    return _inverse_cdf(u, hist)


def match_histogram(source, target, bins: int = DEFAULT_BINS):
    """Remap ``source`` so its distribution matches ``target``'s.

    The monotone map is targetCDF^-1 o sourceCDF: each source value is
    placed at its quantile (empirical rank, ties broken by index) and read
    back through the target's inverse CDF, binned over the union of both
    value ranges with linear interpolation inside bins.  Output order
    matches input order.
    """
    src = np.asarray(source)
    tgt = np.asarray(target)
    if src.size == 0 or tgt.size == 0:
        raise EmptyDistributionError("both distributions must be non-empty")
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    s64 = src.astype(np.float64, copy=False).ravel()
    t64 = tgt.astype(np.float64, copy=False).ravel()
    out = match_core(stable_ranks(s64), s64.min(), s64.max(), t64, bins)
    return out.reshape(src.shape).astype(src.dtype if src.dtype.kind == "f" else np.float64)


def match_sorted(source, target):
    """Exact rank-to-rank matching of two equal-length sequences.

    The value at rank k of the source is replaced by the value at rank k of
    the target (ties broken by original index); original ordering is
    restored.  Serves as the exact counterpart that the binned matcher is
    checked against.
    """
    src = np.asarray(source)
    tgt = np.asarray(target)
    if src.size != tgt.size:
        raise DimensionError(f"length mismatch: {src.size} vs {tgt.size}")
    if src.size == 0:
        raise EmptyDistributionError("both distributions must be non-empty")
    order = np.argsort(src.ravel(), kind="stable")
    out = np.empty(src.size, dtype=np.result_type(src, tgt))
    out[order] = np.sort(tgt.ravel(), kind="stable")
    return out.reshape(src.shape)
