"""Metric-space contract: distances, medoids, variances, weighted Fréchet means.

A concrete space implements pointwise validation, a distance, and a weighted
Fréchet-mean solver.  Everything downstream (splitting, forests, benchmarks)
talks to spaces only through this interface.
"""

from __future__ import annotations

import threading
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateWeightsError,
    PointValidationError,
    WeightValidationError,
)

WEIGHT_SUM_TOL = 1e-12


class SolverCounter:
    """Thread-safe counter of weighted-Fréchet-mean solver invocations."""

    __slots__ = ("_lock", "_count")

    def __init__(self):
        self._lock = threading.Lock()
        self._count = 0

    def bump(self) -> None:
        with self._lock:
            self._count += 1

    def reset(self) -> None:
        with self._lock:
            self._count = 0

    @property
    def value(self) -> int:
        with self._lock:
            return self._count


def validate_weights(weights, n_expected: int | None = None) -> np.ndarray:
    """Check a weight vector: finite, nonnegative, summing to one.

    Returns the weights as a float array.  All-zero weights raise
    DegenerateWeightsError; any other malformed vector raises
    WeightValidationError.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1:
        raise WeightValidationError(f"weights must be 1-d, got shape {w.shape}")
    if n_expected is not None and w.shape[0] != n_expected:
        raise WeightValidationError(
            f"expected {n_expected} weights, got {w.shape[0]}"
        )
    if not np.all(np.isfinite(w)):
        raise WeightValidationError("weights contain non-finite entries")
    if np.any(w < 0):
        raise WeightValidationError("weights contain negative entries")
    total = float(w.sum())
    if total == 0.0:
        raise DegenerateWeightsError("all weights are zero")
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise WeightValidationError(f"weights sum to {total!r}, expected 1")
    return w


class MetricSpace:
    """Base class: a compact metric space with a weighted Fréchet-mean solver.

    Subclasses implement `validate`, `_distance`, and `_mean`.  Public entry
    points validate their arguments; internal hot paths (split search, tree
    routing) may call the underscore methods on already-validated data.
    `solver_calls` counts `_mean` invocations only — distances are never
    counted.
    """

    name = "abstract"

    def __init__(self):
        self.solver_calls = SolverCounter()

    # -- subclass surface --------------------------------------------------
    def validate(self, point) -> None:
        raise NotImplementedError

    def _distance(self, a, b) -> float:
        raise NotImplementedError

    def _mean(self, samples, weights: np.ndarray):
        raise NotImplementedError

    def _pairwise(self, samples) -> np.ndarray | None:
        """Optional fast path for distance_matrix.

        Must produce entries bitwise-identical to pairwise `_distance` calls;
        return None to use the generic pair loop.
        """
        return None

    # -- public surface ----------------------------------------------------
    def distance(self, a, b) -> float:
        self.validate(a)
        self.validate(b)
        return self._distance(a, b)

    def frechet_mean(self, samples: Sequence, weights):
        """Weighted Fréchet mean of validated samples under validated weights."""
        if len(samples) == 0:
            raise PointValidationError("cannot average an empty sample set")
        for i, point in enumerate(samples):
            try:
                self.validate(point)
            except PointValidationError as err:
                raise PointValidationError(f"sample {i}: {err}") from None
        w = validate_weights(weights, n_expected=len(samples))
        return self.mean_unchecked(samples, w)

    def mean_unchecked(self, samples: Sequence, weights: np.ndarray):
        """Solver entry point without validation; still counted."""
        self.solver_calls.bump()
        return self._mean(samples, weights)


def weighted_frechet_mean(space: MetricSpace, samples: Sequence, weights):
    """Weighted Fréchet mean of `samples` in `space` (one counted solver call)."""
    return space.frechet_mean(samples, weights)


def distance_matrix(space: MetricSpace, samples: Sequence) -> np.ndarray:
    """Full pairwise distance matrix; upper triangle computed, then mirrored."""
    n = len(samples)
    if n == 0:
        raise PointValidationError("cannot build a distance matrix from no samples")
    for i, point in enumerate(samples):
        try:
            space.validate(point)
        except PointValidationError as err:
            raise PointValidationError(f"sample {i}: {err}") from None
    fast = space._pairwise(samples)
    if fast is not None:
        return fast
    out = np.zeros((n, n), dtype=float)
    for i in range(n):
        for j in range(i + 1, n):
            d = space._distance(samples[i], samples[j])
            out[i, j] = d
            out[j, i] = d
    return out


def _member_indices(members, n: int) -> np.ndarray:
    """Normalize a member mask or index list to a sorted index array."""
    arr = np.asarray(members)
    if arr.dtype == bool:
        if arr.shape != (n,):
            raise ValueError(f"boolean mask has shape {arr.shape}, expected ({n},)")
        idx = np.flatnonzero(arr)
    else:
        idx = np.unique(arr.astype(np.intp))
        if idx.size and (idx[0] < 0 or idx[-1] >= n):
            raise ValueError("member index out of range")
    if idx.size == 0:
        raise ValueError("member set is empty")
    return idx


def frechet_medoid(dists: np.ndarray, members) -> int:
    """Index of the member minimizing the sum of squared distances to the members.

    Ties break toward the lowest index.
    """
    idx = _member_indices(members, dists.shape[0])
    sub = dists[np.ix_(idx, idx)]
    scores = np.einsum("ij,ij->i", sub, sub)
    return int(idx[int(np.argmin(scores))])


def frechet_variance(dists: np.ndarray, members, center: int) -> float:
    """Mean squared distance from the point at `center` to the members."""
    idx = _member_indices(members, dists.shape[0])
    row = dists[center, idx]
    return float(np.mean(row * row))
