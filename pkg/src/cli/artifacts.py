"""Per-trial artifact files and loading a fitted trial back for prediction."""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from core.errors import DataIOError, DimensionError
from data.datasets import Scaler
from inference.posterior import PosteriorSamples, noise_model_for
from inference.predictive import PredictiveMixture, bma_predictive, load_posterior_csv
from pretrain.checkpoint import load_checkpoint
from schema.models import Method, NoiseModel, SampleSource
from schema.schema import ExperimentConfig, MlpConfig
from subspace.projection import SubspaceModel, identity_model
from subspace.storage import load_projection

logger = logging.getLogger(__name__)

CONFIG_FILE = "config.json"
RESULTS_FILE = "results.json"
CHECKPOINT_FILE = "checkpoint.bin"
SCALER_FILE = "scaler.json"
DEVIATIONS_FILE = "deviations.npy"
PROJECTION_FILE = "projection.bin"
SUBSPACE_FILE = "subspace.json"
POSTERIOR_FILE = "posterior.csv"
INFERENCE_FILE = "inference.json"
REPORT_FILE = "report.json"


def trial_dir(run_dir: Path, trial: int) -> Path:
    return run_dir / f"trial_{trial:02d}"


def write_json(path: Path, payload: dict[str, Any]) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_json(path: Path) -> dict[str, Any]:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise DataIOError(f"missing artifact {path}") from e


def save_scaler(scaler: Scaler, path: Path) -> None:
    write_json(
        path,
        {
            "x_mean": scaler.x_mean.tolist(),
            "x_std": scaler.x_std.tolist(),
            "y_mean": scaler.y_mean,
            "y_std": scaler.y_std,
        },
    )


def load_scaler(path: Path) -> Scaler:
    payload = read_json(path)
    return Scaler(
        x_mean=np.asarray(payload["x_mean"], dtype=np.float64),
        x_std=np.asarray(payload["x_std"], dtype=np.float64),
        y_mean=float(payload["y_mean"]),
        y_std=float(payload["y_std"]),
    )


def load_run_config(run_dir: Path) -> ExperimentConfig:
    path = run_dir / CONFIG_FILE
    if not path.is_file():
        raise DataIOError(f"{run_dir} has no {CONFIG_FILE}; is it a completed run?")
    return ExperimentConfig.model_validate_json(path.read_text(encoding="utf-8"))


def load_subspace_model(config: ExperimentConfig, mlp: MlpConfig, directory: Path) -> SubspaceModel:
    """The subspace a trial's inference ran in, rebuilt from its artifacts."""
    anchor = load_checkpoint(mlp, directory / CHECKPOINT_FILE)
    prior_std = config.subspace.prior_std
    if config.method == Method.FULL:
        return identity_model(np.zeros_like(anchor), prior_std)
    if config.method == Method.SGD:
        return identity_model(anchor, prior_std)
    return SubspaceModel(anchor=anchor, projection=load_projection(directory / PROJECTION_FILE), prior_std=prior_std)


@dataclass(frozen=True)
class FittedTrial:
    """Everything needed to form predictive mixtures for one trial of a run."""

    config: ExperimentConfig
    mlp: MlpConfig
    model: SubspaceModel
    samples: PosteriorSamples
    scaler: Scaler
    noise: NoiseModel

    @classmethod
    def load(cls, run_dir: Path | str, trial: int = 0) -> "FittedTrial":
        run_dir = Path(run_dir)
        config = load_run_config(run_dir)
        if not 0 <= trial < config.experiment.trials:
            raise DataIOError(f"run {run_dir.name} has no trial {trial}")
        directory = trial_dir(run_dir, trial)
        scaler = load_scaler(directory / SCALER_FILE)
        mlp = config.network.mlp(scaler.x_mean.shape[0])
        source = SampleSource(read_json(directory / INFERENCE_FILE)["source"])
        logger.debug(f"loading trial {trial} of {run_dir}")
        return cls(
            config=config,
            mlp=mlp,
            model=load_subspace_model(config, mlp, directory),
            samples=load_posterior_csv(directory / POSTERIOR_FILE, source),
            scaler=scaler,
            noise=noise_model_for(mlp),
        )

    def predict(self, x: np.ndarray) -> PredictiveMixture:
        """Mixtures for inputs in original units, returned in original units."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.mlp.input_dim:
            raise DimensionError(f"inputs have shape {x.shape}, the network expects {self.mlp.input_dim} features")
        x = self.scaler.transform_x(x)
        mixture = bma_predictive(self.model, self.samples, self.mlp, x, self.noise)
        return mixture.to_original(self.scaler)
