"""Typed errors raised across the package."""


class MetricSpaceError(Exception):
    """Base class for metric-space failures."""


class PointValidationError(MetricSpaceError, ValueError):
    """A point does not satisfy the invariants of its space."""


class WeightValidationError(MetricSpaceError, ValueError):
    """A weight vector is malformed (negative, non-finite, or wrong sum)."""


class DegenerateWeightsError(MetricSpaceError, ValueError):
    """All weights are zero, so no weighted mean is defined."""


class SolverConvergenceError(MetricSpaceError, RuntimeError):
    """An iterative mean solver exhausted its iteration budget."""

    def __init__(self, message: str, iterations: int, grad_norm: float):
        super().__init__(f"{message} (iterations={iterations}, grad_norm={grad_norm:.3e})")
        self.iterations = iterations
        self.grad_norm = grad_norm


class ConfigError(ValueError):
    """A configuration value is out of its documented range."""


class GenerationError(RuntimeError):
    """Scenario generation failed to produce a valid sample."""
