"""Simulation scenarios: single-index regression with metric-space responses.

All scenarios share one design: covariates X ~ Uniform[0,1]^d and a scalar
index eta(x) = alpha + (x - 0.5)' beta / sqrt(d) with alpha, beta standard
normal.  Each space turns eta into a true mean m(x) and adds its own noise:

- euclidean: m = expit(eta), additive Gaussian noise, clipped to the interval;
- wasserstein: quantile grids of N(mu(eta), sigma(eta)^2) composed with a
  random smooth distortion drawn from a family that averages to the identity;
- sphere: a curve on S^2 through expit(eta), Gaussian noise in the tangent
  plane mapped through the exponential;
- warping: exponential-family warpings with Gaussian-process noise applied in
  square-root-velocity coordinates.

Replicate files round-trip exactly: floats are written with repr(), which
preserves every bit of an IEEE double.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit, ndtri

from .errors import ConfigError, GenerationError
from .metric import MetricSpace
from .spaces import make_space
from .spaces.sphere import sphere_exp, tangent_basis
from .spaces.warping import srvf, srvf_inverse, trapezoid_weights, warp_grid
from .spaces.wasserstein import quantile_grid

NOISE_HARMONICS = np.array([-4, -3, -2, -1, 1, 2, 3, 4])
SPHERE_NOISE_VAR = 0.1
GP_NOISE_VAR = 0.01
GP_LENGTH_SCALE = 0.3
MAX_RESAMPLES = 100


@dataclass
class SingleIndexParams:
    alpha: float
    beta: np.ndarray


@dataclass
class ScenarioConfig:
    space: str
    n_train: int
    d: int
    n_test: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.n_train < 1 or self.n_test < 0 or self.d < 1:
            raise ConfigError(
                f"invalid scenario sizes n_train={self.n_train}, "
                f"n_test={self.n_test}, d={self.d}"
            )
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")


@dataclass
class Scenario:
    config: ScenarioConfig
    params: SingleIndexParams
    space: MetricSpace
    X_train: np.ndarray
    y_train: list
    train_means: list
    X_test: np.ndarray
    y_test: list
    test_means: list


def draw_params(d: int, rng) -> SingleIndexParams:
    """Draw index parameters: alpha standard normal, beta a random direction.

    beta starts as a standard normal vector and is rescaled to norm sqrt(d),
    the root-mean-square norm of the raw draw.  This keeps the direction
    uniform and the typical index spread intact while ruling out the
    small-norm draws under which m(x) is essentially flat and regression
    quality cannot be distinguished from a constant fit.
    """
    alpha = float(rng.standard_normal())
    beta = rng.standard_normal(d)
    norm = float(np.linalg.norm(beta))
    if norm > 0.0:
        beta = beta * (np.sqrt(d) / norm)
    return SingleIndexParams(alpha=alpha, beta=beta)


def eta(X: np.ndarray, params: SingleIndexParams) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return params.alpha + (X - 0.5) @ params.beta / np.sqrt(X.shape[1])


def distortion(values: np.ndarray, k: int) -> np.ndarray:
    """Nondecreasing map eps(v) = v - sin(pi k v) / (pi |k|).

    Opposite harmonics cancel, so a uniform draw over +-k averages back to the
    identity and the distortion acts as mean-zero quantile noise.
    """
    return values - np.sin(np.pi * k * values) / (np.pi * abs(k))


def gen_euclidean(n, d, rng, params, noise=True, noise_sd=0.1, low=-1.0, high=2.0):
    X = rng.random((n, d))
    means = expit(eta(X, params))
    if noise:
        y = np.clip(means + noise_sd * rng.standard_normal(n), low, high)
    else:
        y = means.copy()
    return X, [float(v) for v in y], [float(v) for v in means]


def gen_wasserstein(n, d, rng, params, noise=True, grid_size=100,
                    sigma0=1.0, sigma_gain=2.5):
    X = rng.random((n, d))
    e = eta(X, params)
    mu = e
    sd = sigma0 + sigma_gain * expit(e)
    z = ndtri(quantile_grid(grid_size))
    means = mu[:, None] + sd[:, None] * z[None, :]
    responses = []
    for i in range(n):
        if noise:
            k = int(rng.choice(NOISE_HARMONICS))
            responses.append(distortion(means[i], k))
        else:
            responses.append(means[i].copy())
    return X, responses, [means[i] for i in range(n)]


def sphere_curve(e: np.ndarray) -> np.ndarray:
    """True mean on S^2: nu = expit(eta) mapped through a spiral-like arc."""
    nu = expit(e)
    flank = np.sqrt(1.0 - nu**2)
    return np.stack([flank * np.cos(np.pi * nu), flank * np.sin(np.pi * nu), nu], axis=-1)


def gen_sphere(n, d, rng, params, noise=True, noise_var=SPHERE_NOISE_VAR):
    X = rng.random((n, d))
    means = sphere_curve(eta(X, params))
    scale = np.sqrt(noise_var)
    responses = []
    for i in range(n):
        m = means[i]
        if noise:
            b1, b2 = tangent_basis(m)
            u = rng.standard_normal(2) * scale
            responses.append(sphere_exp(m, u[0] * b1 + u[1] * b2))
        else:
            responses.append(m.copy())
    return X, responses, [means[i] for i in range(n)]


def exponential_warping(a: float, grid: np.ndarray) -> np.ndarray:
    """gamma(u) = (exp(4 a u) - 1) / (exp(4 a) - 1); the identity at a = 0."""
    if abs(a) < 1e-12:
        return grid.copy()
    return np.expm1(4.0 * a * grid) / np.expm1(4.0 * a)


def gp_covariance_cholesky(grid: np.ndarray, variance: float, length_scale: float):
    cov = variance * np.exp(-np.abs(grid[:, None] - grid[None, :]) / length_scale)
    return np.linalg.cholesky(cov + 1e-12 * np.eye(grid.size))


def gen_warping(n, d, rng, params, noise=True, grid_size=100,
                noise_var=GP_NOISE_VAR, length_scale=GP_LENGTH_SCALE):
    X = rng.random((n, d))
    a = 3.0 * (expit(eta(X, params)) - 0.5)
    grid = warp_grid(grid_size)
    tw = trapezoid_weights(grid_size)
    chol = gp_covariance_cholesky(grid, noise_var, length_scale)
    responses = []
    means = []
    for i in range(n):
        gamma_m = exponential_warping(float(a[i]), grid)
        means.append(gamma_m)
        psi = srvf(gamma_m)
        if not noise:
            responses.append(srvf_inverse(psi))
            continue
        # draw tangent noise until the perturbed point stays in the positive
        # orthant (strictly positive srvf values)
        for attempt in range(MAX_RESAMPLES + 1):
            v = chol @ rng.standard_normal(grid_size)
            v = v - np.dot(v * psi, tw) * psi
            theta = float(np.sqrt(np.dot(v * v, tw)))
            if theta < 1e-15:
                psi_y = psi.copy()
            else:
                psi_y = np.cos(theta) * psi + (np.sin(theta) / theta) * v
                psi_y /= np.sqrt(np.dot(psi_y * psi_y, tw))
            if np.all(psi_y > 0):
                responses.append(srvf_inverse(psi_y))
                break
        else:
            raise GenerationError(
                f"observation {i}: {MAX_RESAMPLES} resamples left the positive orthant"
            )
    return X, responses, means


GENERATORS = {
    "euclidean": gen_euclidean,
    "wasserstein": gen_wasserstein,
    "sphere": gen_sphere,
    "warping": gen_warping,
}


def make_scenario(config: ScenarioConfig) -> Scenario:
    """Draw parameters, then a training block, then a test block."""
    if config.space not in GENERATORS:
        raise ConfigError(
            f"unknown scenario space {config.space!r}; choose from {sorted(GENERATORS)}"
        )
    gen = GENERATORS[config.space]
    rng = np.random.default_rng(np.random.SeedSequence([config.seed]))
    params = draw_params(config.d, rng)
    X_train, y_train, train_means = gen(config.n_train, config.d, rng, params)
    X_test, y_test, test_means = gen(config.n_test, config.d, rng, params)
    return Scenario(
        config=config,
        params=params,
        space=make_space(config.space),
        X_train=X_train,
        y_train=y_train,
        train_means=train_means,
        X_test=X_test,
        y_test=y_test,
        test_means=test_means,
    )


# -- replicate files ---------------------------------------------------------

def _payload(value) -> np.ndarray:
    return np.atleast_1d(np.asarray(value, dtype=float))


def _write_row(out: io.TextIOBase, kind: str, x: np.ndarray, payload) -> None:
    cells = [kind] + [repr(float(v)) for v in x] + [repr(float(v)) for v in _payload(payload)]
    out.write(",".join(cells) + "\n")


def write_dataset(path, scenario: Scenario) -> None:
    """One replicate per file: train rows carry responses, test rows true means."""
    cfg = scenario.config
    payload = _payload(scenario.y_train[0]).size
    with open(path, "w", encoding="utf-8") as out:
        out.write("# metric-forest dataset\n")
        out.write(f"# space={cfg.space}\n")
        out.write(f"# n_train={cfg.n_train}\n")
        out.write(f"# n_test={cfg.n_test}\n")
        out.write(f"# d={cfg.d}\n")
        out.write(f"# seed={cfg.seed}\n")
        out.write(f"# payload={payload}\n")
        out.write(f"# columns=kind,x*{cfg.d},y*{payload}\n")
        for x, y in zip(scenario.X_train, scenario.y_train):
            _write_row(out, "train", x, y)
        for x, m in zip(scenario.X_test, scenario.test_means):
            _write_row(out, "test", x, m)


@dataclass
class DatasetFile:
    header: dict
    X_train: np.ndarray
    y_train: list
    X_test: np.ndarray
    test_means: list


def read_dataset(path) -> DatasetFile:
    header: dict = {}
    train_x, train_y, test_x, test_m = [], [], [], []
    with open(path, "r", encoding="utf-8") as src:
        for line in src:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, value = body.split("=", 1)
                    header[key.strip()] = value.strip()
                continue
            cells = line.split(",")
            kind = cells[0]
            d = int(header["d"])
            payload = int(header["payload"])
            if len(cells) != 1 + d + payload:
                raise GenerationError(
                    f"{path}: row has {len(cells) - 1} values, expected {d + payload}"
                )
            x = np.array([float(v) for v in cells[1 : 1 + d]])
            y = np.array([float(v) for v in cells[1 + d :]])
            y_out = float(y[0]) if payload == 1 else y
            if kind == "train":
                train_x.append(x)
                train_y.append(y_out)
            elif kind == "test":
                test_x.append(x)
                test_m.append(y_out)
            else:
                raise GenerationError(f"{path}: unknown row kind {kind!r}")
    return DatasetFile(
        header=header,
        X_train=np.array(train_x),
        y_train=train_y,
        X_test=np.array(test_x),
        test_means=test_m,
    )


def dataset_path(out_dir, space: str, n: int, d: int, rep: int) -> Path:
    return Path(out_dir) / f"{space}_n{n}_d{d}_rep{rep:03d}.txt"
