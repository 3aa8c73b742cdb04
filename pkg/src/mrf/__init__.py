"""Random forests for regression with metric-space-valued responses."""

from .errors import (
    ConfigError,
    DegenerateWeightsError,
    GenerationError,
    MetricSpaceError,
    PointValidationError,
    SolverConvergenceError,
    WeightValidationError,
)
from .metric import (
    MetricSpace,
    distance_matrix,
    frechet_medoid,
    frechet_variance,
    weighted_frechet_mean,
)
from .spaces import EuclideanInterval, Sphere, WarpingSpace, Wasserstein1D, make_space

__version__ = "0.1.0"

__all__ = [
    "MetricSpace",
    "distance_matrix",
    "frechet_medoid",
    "frechet_variance",
    "weighted_frechet_mean",
    "EuclideanInterval",
    "Wasserstein1D",
    "Sphere",
    "WarpingSpace",
    "make_space",
    "MetricSpaceError",
    "PointValidationError",
    "WeightValidationError",
    "DegenerateWeightsError",
    "SolverConvergenceError",
    "ConfigError",
    "GenerationError",
    "__version__",
]
