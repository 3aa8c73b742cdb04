"""Closed interval of the real line with the absolute-value metric.

Serves as the sanity oracle: the weighted Fréchet mean here is the plain
arithmetic weighted average, so forest predictions can be checked against a
dot product.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, PointValidationError
from ..metric import MetricSpace

BOUND_TOL = 1e-12


class EuclideanInterval(MetricSpace):
    name = "euclidean"

    def __init__(self, low: float = -1.0, high: float = 2.0):
        super().__init__()
        low, high = float(low), float(high)
        if not (np.isfinite(low) and np.isfinite(high) and low < high):
            raise ConfigError(f"invalid interval [{low}, {high}]")
        self.low = low
        self.high = high

    def validate(self, point) -> None:
        try:
            x = float(point)
        except (TypeError, ValueError):
            raise PointValidationError(f"not a scalar: {point!r}") from None
        if not np.isfinite(x):
            raise PointValidationError(f"non-finite value {x!r}")
        if x < self.low - BOUND_TOL or x > self.high + BOUND_TOL:
            raise PointValidationError(
                f"value {x} outside [{self.low}, {self.high}]"
            )

    def _distance(self, a, b) -> float:
        return abs(float(a) - float(b))

    def _mean(self, samples, weights: np.ndarray) -> float:
        return float(np.dot(weights, np.asarray(samples, dtype=float)))
