"""Concrete metric spaces for forest regression."""

from ..errors import ConfigError
from .euclidean import EuclideanInterval
from .sphere import Sphere
from .warping import WarpingSpace
from .wasserstein import Wasserstein1D

SPACES = {
    EuclideanInterval.name: EuclideanInterval,
    Wasserstein1D.name: Wasserstein1D,
    Sphere.name: Sphere,
    WarpingSpace.name: WarpingSpace,
}


def make_space(name: str):
    """Instantiate a space by its registry name."""
    try:
        cls = SPACES[name]
    except KeyError:
        raise ConfigError(
            f"unknown space {name!r}; choose from {sorted(SPACES)}"
        ) from None
    return cls()


__all__ = [
    "EuclideanInterval",
    "Wasserstein1D",
    "Sphere",
    "WarpingSpace",
    "SPACES",
    "make_space",
]
