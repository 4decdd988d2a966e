"""Posterior draws, Bayesian model averaging and the posterior sample dump."""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from core.errors import DataIOError, DimensionError, InvalidInputError, NumericError
from core.numerics import RngStream
from data.datasets import Scaler
from inference.posterior import PosteriorSamples
from inference.vi import VariationalParams
from network.mlp import forward_batch, head_variance
from schema.models import NoiseModel, SampleSource
from schema.schema import MlpConfig
from subspace.projection import SubspaceModel, embed

logger = logging.getLogger(__name__)

LOG_NOISE_COLUMN = "log_noise"


@dataclass(frozen=True)
class PredictiveMixture:
    """Equal-weight Gaussian mixtures, one row per test point."""

    means: np.ndarray
    """(N, J) component means."""
    variances: np.ndarray
    """(N, J) component variances."""

    def __post_init__(self) -> None:
        if self.means.ndim != 2 or self.means.shape != self.variances.shape:
            raise DimensionError(f"means {self.means.shape} and variances {self.variances.shape} must be equal 2-d")
        if np.any(self.variances < 0):
            raise InvalidInputError("component variances must be non-negative")

    @property
    def n_points(self) -> int:
        return self.means.shape[0]

    @property
    def n_components(self) -> int:
        return self.means.shape[1]

    @property
    def mean(self) -> np.ndarray:
        return self.means.mean(axis=1)

    @property
    def variance(self) -> np.ndarray:
        """law of total variance, clipped at zero against rounding."""
        second = np.mean(self.variances + self.means**2, axis=1)
        return np.maximum(second - self.mean**2, 0.0)

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(self.variance)

    @property
    def epistemic_std(self) -> np.ndarray:
        """spread of the component means: the width of the functional posterior, without observation noise."""
        return self.means.std(axis=1)

    def to_original(self, scaler: Scaler) -> "PredictiveMixture":
        """Maps standardized-target mixtures back to original units."""
        return PredictiveMixture(means=scaler.inverse_y(self.means), variances=scaler.inverse_variance(self.variances))


def draw_posterior(
    source: PosteriorSamples | VariationalParams,
    n_draws: int,
    rng: RngStream | None = None,
) -> PosteriorSamples:
    """J draws for averaging.

    Sampler output is thinned with an even stride ending at the last draw;
    a variational distribution is sampled directly.
    """
    if n_draws < 1:
        raise InvalidInputError(f"need at least one draw, got {n_draws}")
    if isinstance(source, VariationalParams):
        if rng is None:
            raise InvalidInputError("sampling a variational distribution needs an rng")
        return PosteriorSamples(
            draws=source.sample(n_draws, rng.generator()),
            source=SampleSource.VI,
            has_log_noise=source.has_log_noise,
        )
    total = source.n_draws
    if total < n_draws:
        raise InvalidInputError(f"requested {n_draws} draws but only {total} are available")
    stride = total // n_draws
    thinned = source.draws[total - 1 - stride * (n_draws - 1) :: stride]
    logger.debug(f"thinned {total} draws with stride {stride}")
    return PosteriorSamples(
        draws=thinned.copy(),
        source=source.source,
        acceptance_rate=source.acceptance_rate,
        step_size=source.step_size,
        has_log_noise=source.has_log_noise,
    )


def bma_predictive(
    model: SubspaceModel,
    samples: PosteriorSamples,
    config: MlpConfig,
    x: np.ndarray,
    noise: NoiseModel,
) -> PredictiveMixture:
    """One mixture component per draw: (mu_theta_j(x), v_j) with theta_j = embed(z_j)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x.reshape(-1, config.input_dim)
    if x.ndim != 2 or x.shape[1] != config.input_dim:
        raise DimensionError(f"inputs have shape {x.shape}, network expects {config.input_dim} features")
    coords = samples.coordinates
    if coords.shape[1] != model.k:
        raise DimensionError(f"draws have {coords.shape[1]} coordinates, subspace has {model.k}")
    if noise == NoiseModel.GLOBAL and not samples.has_log_noise:
        raise InvalidInputError("the global noise model needs a log-noise coordinate in the draws")

    means = np.empty((x.shape[0], samples.n_draws))
    variances = np.empty_like(means)
    for j, z in enumerate(coords):
        cache = forward_batch(config, embed(model, z), x)
        means[:, j] = cache.mean
        if noise == NoiseModel.HEAD:
            variances[:, j] = head_variance(cache.raw)
        else:
            variances[:, j] = np.exp(2.0 * samples.log_noise[j])
    if not (np.all(np.isfinite(means)) and np.all(np.isfinite(variances))):
        raise NumericError("predictive mixture is not finite")
    return PredictiveMixture(means=means, variances=variances)


def averaged_weight_diagnostic(model: SubspaceModel, samples: PosteriorSamples) -> np.ndarray:
    """anchor + P mean(z); a diagnostic, metrics always use the mixture."""
    return embed(model, samples.coordinates.mean(axis=0))


def posterior_columns(k: int, has_log_noise: bool) -> list[str]:
    columns = [f"z_{i + 1}" for i in range(k)]
    return columns + [LOG_NOISE_COLUMN] if has_log_noise else columns


def save_posterior_csv(samples: PosteriorSamples, path: Path | str) -> None:
    k = samples.coordinates.shape[1]
    frame = pd.DataFrame(samples.draws, columns=posterior_columns(k, samples.has_log_noise))
    frame.to_csv(path, index=False, float_format="%.17g")


def load_posterior_csv(path: Path | str, source: SampleSource) -> PosteriorSamples:
    path = Path(path)
    if not path.is_file():
        raise DataIOError(f"posterior samples not found: {path}")
    frame = pd.read_csv(path, dtype=np.float64)
    has_log_noise = bool(len(frame.columns)) and frame.columns[-1] == LOG_NOISE_COLUMN
    k = len(frame.columns) - int(has_log_noise)
    if list(frame.columns) != posterior_columns(k, has_log_noise):
        raise DataIOError(f"{path} does not have a z_1..z_K header")
    return PosteriorSamples(draws=frame.to_numpy(), source=source, has_log_noise=has_log_noise)
