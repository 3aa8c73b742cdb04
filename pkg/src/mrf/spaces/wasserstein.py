"""One-dimensional distributions as quantile functions on a fixed grid.

A distribution is stored as the values of its quantile function at M midpoint
nodes (2m+1)/(2M), m = 0..M-1.  The nodes sit strictly inside (0, 1) so
unbounded quantile functions (e.g. Gaussians) stay finite, and the matching
quadrature weight is 1/M per node, which integrates constants exactly: a
location shift by c lies at distance exactly |c|.

The 2-Wasserstein distance between two distributions is the L2 distance
between their quantile functions, and the weighted barycenter is the pointwise
weighted average projected back onto nondecreasing vectors (an isotonic
regression, solved by pool-adjacent-violators).
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, PointValidationError
from ..metric import MetricSpace

DEFAULT_GRID_SIZE = 100


def quantile_grid(size: int = DEFAULT_GRID_SIZE) -> np.ndarray:
    """Midpoint evaluation nodes (2m+1)/(2M) in (0, 1)."""
    if size < 1:
        raise ConfigError(f"grid size must be >= 1, got {size}")
    return (np.arange(size) + 0.5) / size


def pava_isotonic(values, weights=None) -> np.ndarray:
    """Weighted L2 projection onto nondecreasing vectors (pool adjacent violators).

    `weights` default to ones.  Pooled entries come out exactly equal, so the
    result is nondecreasing without tolerance games; the projection preserves
    the weighted mean and is idempotent.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError(f"expected a nonempty 1-d array, got shape {v.shape}")
    if weights is None:
        w = np.ones_like(v)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != v.shape:
            raise ValueError("values and weights must have matching shapes")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("weights must be finite and strictly positive")

    # blocks kept as parallel stacks of (mean, total weight, length)
    means: list[float] = []
    totals: list[float] = []
    counts: list[int] = []
    for x, wi in zip(v, w):
        means.append(float(x))
        totals.append(float(wi))
        counts.append(1)
        while len(means) > 1 and means[-2] > means[-1]:
            m2, w2, c2 = means.pop(), totals.pop(), counts.pop()
            m1, w1, c1 = means.pop(), totals.pop(), counts.pop()
            wt = w1 + w2
            means.append((m1 * w1 + m2 * w2) / wt)
            totals.append(wt)
            counts.append(c1 + c2)
    return np.repeat(means, counts)


def wasserstein_distance(p, q) -> float:
    """L2 distance between two quantile grids under the midpoint quadrature."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape or p.ndim != 1:
        raise ValueError(f"grid shapes differ: {p.shape} vs {q.shape}")
    diff = p - q
    return float(np.sqrt(np.dot(diff, diff) / p.size))


def wasserstein_mean(samples, weights) -> np.ndarray:
    """Weighted barycenter: pointwise average, then isotonic projection."""
    stacked = np.asarray(samples, dtype=float)
    avg = np.asarray(weights, dtype=float) @ stacked
    return pava_isotonic(avg)


class Wasserstein1D(MetricSpace):
    name = "wasserstein"

    def __init__(self, grid_size: int = DEFAULT_GRID_SIZE):
        super().__init__()
        if grid_size < 1:
            raise ConfigError(f"grid size must be >= 1, got {grid_size}")
        self.grid_size = int(grid_size)
        self.grid = quantile_grid(self.grid_size)

    def validate(self, point) -> None:
        v = np.asarray(point, dtype=float)
        if v.ndim != 1 or v.shape[0] != self.grid_size:
            raise PointValidationError(
                f"expected a quantile grid of length {self.grid_size}, "
                f"got shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise PointValidationError("quantile grid contains non-finite values")
        if np.any(np.diff(v) < 0):
            raise PointValidationError("quantile grid is not nondecreasing")

    def _distance(self, a, b) -> float:
        diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
        return float(np.sqrt(np.dot(diff, diff) / self.grid_size))

    def _mean(self, samples, weights: np.ndarray) -> np.ndarray:
        return wasserstein_mean(samples, weights)
