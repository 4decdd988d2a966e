"""Log posterior over subspace coordinates and its gradient."""

import logging
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from scipy.special import expit
from scipy.stats import norm

from core.errors import DimensionError, InvalidInputError, NumericError
from core.numerics import RngStream
from data.datasets import Dataset
from network.mlp import backward, forward_batch, head_variance
from schema.models import NoiseModel, OutputHead, SampleSource
from schema.schema import MlpConfig
from subspace.projection import SubspaceModel, embed, pullback_gradient

logger = logging.getLogger(__name__)

LOG_NOISE_PRIOR_MEAN = float(np.log(0.5))
LOG_NOISE_PRIOR_STD = 1.0
_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class PosteriorSamples:
    draws: np.ndarray
    """(J, dim) coordinates; the last column is the log-noise scale when ``has_log_noise``."""
    source: SampleSource
    acceptance_rate: float | None = None
    step_size: float | None = None
    has_log_noise: bool = False

    def __post_init__(self) -> None:
        if self.draws.ndim != 2 or self.draws.shape[0] < 1:
            raise InvalidInputError(f"need at least one draw, got shape {self.draws.shape}")
        if not np.all(np.isfinite(self.draws)):
            raise NumericError("posterior draws contain non-finite values")

    @property
    def n_draws(self) -> int:
        return self.draws.shape[0]

    @property
    def coordinates(self) -> np.ndarray:
        """draws without the log-noise column."""
        return self.draws[:, :-1] if self.has_log_noise else self.draws

    @property
    def log_noise(self) -> np.ndarray | None:
        return self.draws[:, -1] if self.has_log_noise else None


@dataclass(frozen=True)
class TargetDensity:
    """A differentiable log density on R^dim."""

    dim: int
    value_and_grad: Callable[[np.ndarray], tuple[float, np.ndarray]]

    def log_density(self, z: np.ndarray) -> float:
        return self.value_and_grad(z)[0]

    def grad(self, z: np.ndarray) -> np.ndarray:
        return self.value_and_grad(z)[1]


def noise_model_for(config: MlpConfig) -> NoiseModel:
    return NoiseModel.HEAD if config.head == OutputHead.MEAN_VARIANCE else NoiseModel.GLOBAL


def target_dim(model: SubspaceModel, noise: NoiseModel) -> int:
    """K, plus one log-noise coordinate for the global noise model."""
    return model.k + (1 if noise == NoiseModel.GLOBAL else 0)


def prior_moments(model: SubspaceModel, noise: NoiseModel) -> tuple[np.ndarray, np.ndarray]:
    mean = np.zeros(target_dim(model, noise))
    std = np.full(target_dim(model, noise), model.prior_std)
    if noise == NoiseModel.GLOBAL:
        mean[-1] = LOG_NOISE_PRIOR_MEAN
        std[-1] = LOG_NOISE_PRIOR_STD
    return mean, std


def split_coordinates(model: SubspaceModel, z: np.ndarray, noise: NoiseModel) -> tuple[np.ndarray, float | None]:
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (target_dim(model, noise),):
        raise DimensionError(f"expected {target_dim(model, noise)} coordinates, got shape {z.shape}")
    if noise == NoiseModel.GLOBAL:
        return z[:-1], float(z[-1])
    return z, None


def log_likelihood_and_grad(
    model: SubspaceModel,
    config: MlpConfig,
    dataset: Dataset | None,
    z: np.ndarray,
    noise: NoiseModel,
) -> tuple[float, np.ndarray]:
    """sum_i log N(y_i; mu(x_i), v_i) and its gradient in z."""
    if noise == NoiseModel.HEAD and config.head != OutputHead.MEAN_VARIANCE:
        raise InvalidInputError("the head noise model needs a mean-and-variance head")
    coords, log_noise = split_coordinates(model, z, noise)
    if dataset is None or dataset.n == 0:
        return 0.0, np.zeros(target_dim(model, noise))

    theta = embed(model, coords)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        cache = forward_batch(config, theta, dataset.features)
        r = dataset.targets - cache.mean
        d_raw = np.zeros_like(cache.raw)
        if noise == NoiseModel.HEAD:
            v = head_variance(cache.raw)
            d_raw[:, 1] = (r * r / (2.0 * v * v) - 0.5 / v) * expit(cache.raw[:, 1])
        else:
            v = np.full_like(r, np.exp(2.0 * log_noise))
        value = float(np.sum(-0.5 * (_LOG_2PI + np.log(v)) - r * r / (2.0 * v)))
        d_raw[:, 0] = r / v
        grad = pullback_gradient(model, backward(config, theta, cache, d_raw))
        if noise == NoiseModel.GLOBAL:
            grad = np.append(grad, np.sum(r * r / v - 1.0))
    if not np.isfinite(value) or not np.all(np.isfinite(grad)):
        raise NumericError("log likelihood is not finite", z=z)
    return value, grad


def log_prior_and_grad(model: SubspaceModel, z: np.ndarray, noise: NoiseModel) -> tuple[float, np.ndarray]:
    z = np.asarray(z, dtype=np.float64)
    mean, std = prior_moments(model, noise)
    if z.shape != mean.shape:
        raise DimensionError(f"expected {mean.shape[0]} coordinates, got shape {z.shape}")
    return float(np.sum(norm.logpdf(z, loc=mean, scale=std))), -(z - mean) / std**2


def subspace_log_posterior(
    model: SubspaceModel,
    config: MlpConfig,
    dataset: Dataset | None,
    z: np.ndarray,
    noise: NoiseModel,
) -> float:
    """Unnormalized log posterior at z (log likelihood plus Gaussian prior)."""
    value, _ = log_likelihood_and_grad(model, config, dataset, z, noise)
    prior, _ = log_prior_and_grad(model, z, noise)
    return value + prior


def grad_subspace_log_posterior(
    model: SubspaceModel,
    config: MlpConfig,
    dataset: Dataset | None,
    z: np.ndarray,
    noise: NoiseModel,
) -> np.ndarray:
    _, grad = log_likelihood_and_grad(model, config, dataset, z, noise)
    _, prior_grad = log_prior_and_grad(model, z, noise)
    return grad + prior_grad


def make_target(
    model: SubspaceModel,
    config: MlpConfig,
    dataset: Dataset | None,
    noise: NoiseModel,
    include_prior: bool = True,
) -> TargetDensity:
    """Posterior target for HMC, or the likelihood alone for VI (whose KL handles the prior)."""

    def value_and_grad(z: np.ndarray) -> tuple[float, np.ndarray]:
        value, grad = log_likelihood_and_grad(model, config, dataset, z, noise)
        if include_prior:
            prior, prior_grad = log_prior_and_grad(model, z, noise)
            return value + prior, grad + prior_grad
        return value, grad

    return TargetDensity(dim=target_dim(model, noise), value_and_grad=value_and_grad)


def check_gradient(
    target: TargetDensity,
    z: np.ndarray,
    rng: RngStream | None = None,
    max_coords: int = 16,
    h: float = 1e-5,
    rtol: float = 1e-5,
    atol: float = 1e-7,
) -> float:
    """Compares the analytic gradient with central differences.

    At most ``max_coords`` coordinates are checked (a random subset when the
    target is larger). Returns the largest relative error and raises
    :class:`NumericError` when any coordinate exceeds ``atol + rtol * |fd|``.
    """
    z = np.asarray(z, dtype=np.float64)
    grad = target.grad(z)
    coords = np.arange(target.dim)
    if target.dim > max_coords:
        generator = (rng or RngStream(0)).generator()
        coords = np.sort(generator.choice(target.dim, size=max_coords, replace=False))
    worst = 0.0
    for i in coords:
        step = np.zeros_like(z)
        step[i] = h
        fd = (target.log_density(z + step) - target.log_density(z - step)) / (2.0 * h)
        error = abs(grad[i] - fd)
        worst = max(worst, error / (1e-8 + abs(fd)))
        if error > atol + rtol * abs(fd):
            raise NumericError(
                f"gradient check failed at coordinate {i}: analytic {grad[i]:.6g}, finite difference {fd:.6g}",
                z=z,
            )
    logger.debug(f"gradient check passed on {len(coords)} coordinates (max rel err {worst:.2e})")
    return worst
