"""Unit sphere in R^3 with the arc-length metric.

Distances are great-circle angles; means are Karcher means computed by the
classical fixed-point iteration mu <- Exp_mu(sum_i w_i Log_mu(y_i)), which
converges for samples inside an open hemisphere.
"""

from __future__ import annotations

import warnings

import numpy as np

from ..errors import MetricSpaceError, PointValidationError, SolverConvergenceError
from ..metric import MetricSpace

UNIT_TOL = 1e-9
TANGENT_TOL = 1e-9
ZERO_ANGLE = 1e-15
HEMISPHERE_MARGIN = 1e-6
KARCHER_TOL = 1e-9
KARCHER_MAX_ITER = 200


def sphere_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Great-circle distance; the inner product is clamped into [-1, 1]."""
    return float(np.arccos(np.clip(np.dot(a, b), -1.0, 1.0)))


def sphere_exp(base: np.ndarray, tangent: np.ndarray) -> np.ndarray:
    """Exponential map; the tangent is projected onto the tangent plane first."""
    drift = float(np.dot(tangent, base))
    if abs(drift) > TANGENT_TOL:
        warnings.warn(
            f"tangent vector deviates from the tangent plane by {drift:.3e}; projecting",
            stacklevel=2,
        )
    t = tangent - drift * base
    theta = float(np.linalg.norm(t))
    if theta < ZERO_ANGLE:
        return np.array(base, dtype=float, copy=True)
    out = np.cos(theta) * base + (np.sin(theta) / theta) * t
    return out / np.linalg.norm(out)


def sphere_log(base: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Inverse of the exponential map; undefined at the antipode."""
    c = float(np.clip(np.dot(base, target), -1.0, 1.0))
    if 1.0 + c < 1e-12:
        raise MetricSpaceError("log map undefined for antipodal points")
    v = target - c * base
    nv = float(np.linalg.norm(v))
    theta = float(np.arccos(c))
    if nv < ZERO_ANGLE:
        return np.zeros(3)
    return (theta / nv) * v


def tangent_basis(point: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic orthonormal basis of the tangent plane at `point`.

    Gram-Schmidt against a fixed reference axis; the axis switches only when
    nearly parallel to `point`, so the basis is reproducible.
    """
    ref = np.array([0.0, 0.0, 1.0])
    if abs(float(np.dot(point, ref))) > 0.9:
        ref = np.array([1.0, 0.0, 0.0])
    b1 = ref - float(np.dot(ref, point)) * point
    b1 /= np.linalg.norm(b1)
    b2 = np.cross(point, b1)
    return b1, b2


def sphere_karcher_mean(
    samples,
    weights,
    tol: float = KARCHER_TOL,
    max_iter: int = KARCHER_MAX_ITER,
) -> np.ndarray:
    """Weighted Karcher mean of points on the sphere.

    Initialized at the weighted medoid; iterates until the tangent-space
    gradient norm drops below `tol`.  The samples must sit inside an open
    hemisphere, checked heuristically through the pairwise distances.
    """
    pts = np.asarray(samples, dtype=float)
    w = np.asarray(weights, dtype=float)
    support = np.flatnonzero(w > 0)
    if support.size == 0:
        raise MetricSpaceError("no support points for the Karcher mean")
    pts = pts[support]
    ws = w[support]

    dots = np.clip(pts @ pts.T, -1.0, 1.0)
    if float(dots.min()) <= np.cos(np.pi - HEMISPHERE_MARGIN):
        raise MetricSpaceError("samples do not lie inside an open hemisphere")

    sq = np.arccos(dots) ** 2
    mu = pts[int(np.argmin(sq @ ws))].copy()

    grad_norm = np.inf
    for _ in range(max_iter):
        cos = np.clip(pts @ mu, -1.0, 1.0)
        theta = np.arccos(cos)
        tang = pts - cos[:, None] * mu[None, :]
        norms = np.linalg.norm(tang, axis=1)
        coef = np.where(norms > ZERO_ANGLE, theta / np.maximum(norms, ZERO_ANGLE), 0.0)
        grad = (ws * coef) @ tang
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm < tol:
            return mu / np.linalg.norm(mu)
        mu = sphere_exp(mu, grad)
    raise SolverConvergenceError(
        "sphere Karcher mean did not converge", max_iter, grad_norm
    )


class Sphere(MetricSpace):
    name = "sphere"

    def validate(self, point) -> None:
        v = np.asarray(point, dtype=float)
        if v.shape != (3,):
            raise PointValidationError(f"expected a 3-vector, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise PointValidationError("point contains non-finite values")
        nrm = float(np.linalg.norm(v))
        if abs(nrm - 1.0) > UNIT_TOL:
            raise PointValidationError(f"point norm {nrm!r} deviates from 1")

    def _distance(self, a, b) -> float:
        return sphere_distance(np.asarray(a, float), np.asarray(b, float))

    def _mean(self, samples, weights: np.ndarray) -> np.ndarray:
        return sphere_karcher_mean(samples, weights)
