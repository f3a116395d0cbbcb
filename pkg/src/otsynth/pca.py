"""Principal-component subspace fitting to accelerate the transport loop.

Deep features are sparse, so the texture's distribution lives in a much
lower-dimensional subspace.  Fitting is always done on the texture/style
distribution; the working distribution is only projected through the
resulting basis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from threadpoolctl import threadpool_limits

from .errors import DimensionError, InsufficientDataError, NumericError

DEFAULT_VARIANCE_THRESHOLD = 0.9

# Eigenvalues below this fraction of the trace are numerical noise and must
# not count toward the variance threshold.
_NOISE_FLOOR = 1e-10


@dataclass
class PcaBasis:
    """Mean + row-orthonormal component matrix, descending variance.

    ``kept_dims`` is the smallest count whose cumulative variance reaches
    the fitting threshold; ``variance_fractions`` are the kept eigenvalues
    divided by the total variance.
    """

    input_dims: int
    kept_dims: int
    mean: np.ndarray
    components: np.ndarray
    variance_fractions: np.ndarray


def fit_pca(s: np.ndarray, variance_threshold: float = DEFAULT_VARIANCE_THRESHOLD) -> PcaBasis:
    """Fit a PCA basis to the rows of ``s``.

    Uses an eigendecomposition of the N x N sample covariance (N stays
    small while the sample count can exceed 10^6).  Component signs are
    fixed so the largest-magnitude entry of each component is positive.
    """
    if s.ndim != 2:
        raise DimensionError(f"expected a 2-d sample matrix, got shape {s.shape}")
    if s.shape[0] < 2:
        raise InsufficientDataError(f"need at least 2 samples, got {s.shape[0]}")
    if not 0.0 < variance_threshold <= 1.0:
        raise ValueError(f"variance_threshold must be in (0, 1], got {variance_threshold}")
    x = s.astype(np.float64, copy=False)
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (s.shape[0] - 1)
    if not np.all(np.isfinite(cov)):
        raise NumericError("covariance contains non-finite values")
    # The divide-and-conquer eigensolver is not bitwise reproducible across
    # BLAS thread counts; pin it to one thread.
    with threadpool_limits(limits=1):
        eigvals, eigvecs = np.linalg.eigh(cov)
    eigvals = np.clip(eigvals[::-1], 0.0, None)
    eigvecs = eigvecs[:, ::-1]
    total = float(eigvals.sum())
    if total <= 0.0:
        # Constant data: a single degenerate component carries everything.
        usable = 1
        fractions = np.zeros(len(eigvals))
        fractions[0] = 1.0
    else:
        usable = int(np.count_nonzero(eigvals >= _NOISE_FLOOR * total))
        usable = max(usable, 1)
        fractions = eigvals / total
    cumulative = np.cumsum(fractions[:usable])
    kept = int(np.searchsorted(cumulative, variance_threshold - 1e-9) + 1)
    kept = min(kept, usable)
    components = eigvecs[:, :kept].T
    flip = np.where(components[np.arange(kept), np.abs(components).argmax(axis=1)] < 0.0, -1.0, 1.0)
    components = components * flip[:, None]
    return PcaBasis(
        input_dims=s.shape[1],
        kept_dims=kept,
        mean=mean.astype(np.float32),
        components=components.astype(np.float32),
        variance_fractions=fractions[:kept].astype(np.float64),
    )


def to_subspace(b: PcaBasis, m: np.ndarray) -> np.ndarray:
    """Center by the fitted mean and project onto the kept components."""
    if m.shape[1] != b.input_dims:
        raise DimensionError(f"sample dims {m.shape[1]} != basis input dims {b.input_dims}")
    return (m - b.mean.astype(m.dtype)) @ b.components.T.astype(m.dtype)


def from_subspace(b: PcaBasis, m: np.ndarray) -> np.ndarray:
    """Reconstruct from subspace coordinates, up to discarded variance."""
    if m.shape[1] != b.kept_dims:
        raise DimensionError(f"sample dims {m.shape[1]} != kept dims {b.kept_dims}")
    return m @ b.components.astype(m.dtype) + b.mean.astype(m.dtype)
