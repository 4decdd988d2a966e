"""SGD pretraining with stochastic weight averaging."""

import logging
from dataclasses import dataclass

import numpy as np

from core.errors import InvalidInputError, TrainingDivergedError
from core.numerics import DenseMatrix, RngStream
from data.datasets import Dataset
from network.mlp import batch_target_and_grad, forward_batch, init_params
from schema.models import GradTargetKind, OutputHead
from schema.schema import MlpConfig, TrainHyper

logger = logging.getLogger(__name__)

# stream ids under the training seed
INIT_STREAM = 1
SHUFFLE_STREAM = 2


@dataclass(frozen=True)
class Trajectory:
    snapshots: np.ndarray
    """(S, n) iterates recorded after the swa start."""
    final: np.ndarray
    swa_mean: np.ndarray
    losses: np.ndarray
    """mean training loss per epoch."""

    @property
    def n_snapshots(self) -> int:
        return self.snapshots.shape[0]


def training_target(config: MlpConfig) -> GradTargetKind:
    if config.head == OutputHead.MEAN_VARIANCE:
        return GradTargetKind.GAUSSIAN_NLL
    return GradTargetKind.MSE_LOSS


def mean_loss(config: MlpConfig, theta: np.ndarray, dataset: Dataset) -> float:
    value, _ = batch_target_and_grad(
        config, theta, dataset.features, dataset.targets, training_target(config)
    )
    return value / dataset.n


def train_map(config: MlpConfig, dataset: Dataset, hyper: TrainHyper) -> Trajectory:
    """Minibatch SGD with momentum, recording snapshots for the SWA mean.

    Snapshots are taken every ``swa_interval`` steps (one epoch by default)
    once ``swa_start`` of the total steps have run; the final step always
    closes the window so at least one snapshot exists.
    """
    if hyper.epochs < 1:
        raise InvalidInputError(f"epochs must be >= 1, got {hyper.epochs}")
    if dataset.n == 0:
        raise InvalidInputError("cannot train on an empty dataset")

    target = training_target(config)
    theta = init_params(config, RngStream(hyper.seed, INIT_STREAM))
    shuffler = RngStream(hyper.seed, SHUFFLE_STREAM).generator()
    batch_size = min(hyper.batch_size, dataset.n)
    steps_per_epoch = -(-dataset.n // batch_size)
    total_steps = hyper.epochs * steps_per_epoch
    interval = hyper.swa_interval or steps_per_epoch
    start = min(int(hyper.swa_start * total_steps), total_steps - 1)

    initial_loss = mean_loss(config, theta, dataset)
    velocity = np.zeros_like(theta)
    snapshots: list[np.ndarray] = []
    losses = np.empty(hyper.epochs)
    step = 0
    for epoch in range(hyper.epochs):
        order = shuffler.permutation(dataset.n)
        epoch_loss = 0.0
        for begin in range(0, dataset.n, batch_size):
            batch = order[begin : begin + batch_size]
            value, grad = batch_target_and_grad(
                config, theta, dataset.features[batch], dataset.targets[batch], target
            )
            if not np.isfinite(value) or not np.all(np.isfinite(grad)):
                raise TrainingDivergedError(
                    f"loss became non-finite at epoch {epoch}, step {step}", last_finite=theta.copy()
                )
            velocity = hyper.momentum * velocity - hyper.learning_rate * grad / len(batch)
            theta = theta + velocity
            epoch_loss += value
            step += 1
            if step > start and ((step - start) % interval == 0 or step == total_steps):
                snapshots.append(theta.copy())
        losses[epoch] = epoch_loss / dataset.n
        if epoch % max(1, hyper.epochs // 10) == 0:
            logger.debug(f"epoch {epoch}: loss {losses[epoch]:.5f}")

    stacked = np.vstack(snapshots)
    final_loss = mean_loss(config, theta, dataset)
    if final_loss > initial_loss:
        raise TrainingDivergedError(
            f"training loss rose from {initial_loss:.5f} to {final_loss:.5f}", last_finite=theta.copy()
        )
    logger.info(
        f"pretrained {total_steps} steps: loss {initial_loss:.4f} -> {final_loss:.4f}, "
        f"{stacked.shape[0]} swa snapshots"
    )
    return Trajectory(snapshots=stacked, final=theta, swa_mean=stacked.mean(axis=0), losses=losses)


def iterate_deviations(trajectory: Trajectory, count: int) -> DenseMatrix:
    """The last ``count`` snapshots minus the SWA mean."""
    if not 1 <= count <= trajectory.n_snapshots:
        raise InvalidInputError(
            f"requested {count} deviations but only {trajectory.n_snapshots} snapshots exist"
        )
    return trajectory.snapshots[-count:] - trajectory.swa_mean


def residual_log_noise(config: MlpConfig, theta: np.ndarray, dataset: Dataset) -> float:
    """log of the training residual RMS, the noise scale of a point-estimate scalar head."""
    mu = forward_batch(config, theta, dataset.features).mean
    rms = float(np.sqrt(np.mean((dataset.targets - mu) ** 2)))
    return float(np.log(max(rms, 1e-6)))
