import hashlib
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from schema.models import (
    Activation,
    DataKind,
    GradTargetKind,
    InferenceKind,
    Method,
    OutputHead,
)


class StrictModel(BaseModel):
    """configuration sections reject unknown keys."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    def config_hash(self) -> str:
        """sha256 of the canonical json dump."""
        return hashlib.sha256(self.model_dump_json().encode("utf-8")).hexdigest()


class MlpConfig(StrictModel):
    """Architecture of a fully connected regression network."""

    input_dim: int = Field(ge=1, description="Number of input features p.")
    hidden: tuple[int, ...] = Field(
        default=(32, 32, 32),
        description="Hidden layer widths.",
        examples=[(32, 32, 32), (50,)],
    )
    head: OutputHead = OutputHead.SCALAR
    activation: Activation = Activation.TANH

    @field_validator("hidden")
    @classmethod
    def _widths_positive(cls, widths: tuple[int, ...]) -> tuple[int, ...]:
        if any(w < 1 for w in widths):
            raise ValueError(f"all hidden widths must be >= 1, got {widths}")
        return widths

    @property
    def output_dim(self) -> int:
        return 2 if self.head == OutputHead.MEAN_VARIANCE else 1

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.input_dim, *self.hidden, self.output_dim)


class TrainHyper(StrictModel):
    """SGD pretraining hyperparameters; epochs are checked by the trainer."""

    epochs: int = 1000
    batch_size: int = Field(default=32, ge=1)
    learning_rate: float = Field(default=0.01, gt=0)
    momentum: float = Field(default=0.9, ge=0, lt=1)
    swa_start: float = Field(default=0.75, gt=0, lt=1, description="Fraction of steps before snapshots begin.")
    swa_interval: int | None = Field(
        default=None, ge=1, description="Steps between snapshots; one epoch when unset."
    )
    seed: int = Field(default=0, ge=0)


class HmcHyper(StrictModel):
    n_leapfrog: int = Field(default=20, ge=1)
    warmup: int = Field(default=1000, ge=0)
    n_samples: int = Field(default=5000, ge=1)
    target_accept: float = Field(default=0.8, gt=0, lt=1)
    step_size: float | None = Field(default=None, ge=0, description="Initial step size; heuristic when unset.")
    adapt_mass: bool = True
    max_stuck: int = Field(default=500, ge=1)


class ViHyper(StrictModel):
    steps: int = Field(default=5000, ge=1)
    learning_rate: float = Field(default=0.01, gt=0)
    lr_final_fraction: float = Field(default=0.1, gt=0, le=1)
    init_std: float = Field(default=0.01, gt=0)
    beta1: float = Field(default=0.9, ge=0, lt=1)
    beta2: float = Field(default=0.999, ge=0, lt=1)
    n_mc_eval: int = Field(default=256, ge=1, description="Samples for the reported ELBO.")


class ExperimentSection(StrictModel):
    name: str = "experiment"
    method: Method = Method.AS
    trials: int = Field(default=1, ge=1)
    seed: int = Field(default=0, ge=0)
    output_dir: Path | None = None


class DataConfig(StrictModel):
    kind: DataKind = DataKind.SINE
    name: str | None = None
    n: int = Field(default=100, ge=1, description="Synthetic training size.")
    noise_std: float = Field(default=0.4, ge=0)
    n_test: int = Field(default=1000, ge=1, description="Synthetic test size.")
    path: Path | None = None
    target: str | None = None
    test_fraction: float = Field(default=0.1, gt=0, lt=1)
    standardize: bool | None = None

    @model_validator(mode="after")
    def _csv_source(self) -> "DataConfig":
        if self.kind == DataKind.CSV:
            if self.path is None or self.target is None:
                raise ValueError("csv data needs both 'path' and 'target'")
            if not self.path.is_file():
                raise ValueError(f"data file {self.path} does not exist")
        return self

    @property
    def dataset_name(self) -> str:
        if self.name:
            return self.name
        if self.kind == DataKind.CSV and self.path is not None:
            return self.path.stem
        return f"sine_n{self.n}_s{self.noise_std:g}"

    @property
    def use_standardization(self) -> bool:
        if self.standardize is not None:
            return self.standardize
        return self.kind == DataKind.CSV


class NetworkConfig(StrictModel):
    hidden: tuple[int, ...] = (32, 32, 32)
    activation: Activation = Activation.TANH
    head: OutputHead = OutputHead.SCALAR

    def mlp(self, input_dim: int) -> MlpConfig:
        return MlpConfig(
            input_dim=input_dim, hidden=self.hidden, head=self.head, activation=self.activation
        )


class PretrainConfig(StrictModel):
    epochs: int = 1000
    batch_size: int = Field(default=32, ge=1)
    learning_rate: float = Field(default=0.01, gt=0)
    momentum: float = Field(default=0.9, ge=0, lt=1)
    swa_start: float = Field(default=0.75, gt=0, lt=1)
    swa_interval: int | None = Field(default=None, ge=1)

    def hyper(self, seed: int) -> TrainHyper:
        return TrainHyper(**self.model_dump(), seed=seed)


class SubspaceConfig(StrictModel):
    dim: int = Field(default=20, ge=1, description="Subspace dimension K.")
    n_gradients: int = Field(default=100, ge=1, description="Gradient samples (or deviations) M.")
    perturbation_std: float | None = Field(
        default=None, ge=0, description="sigma_0; 0.1 x RMS of the anchor when unset."
    )
    prior_std: float = Field(default=1.0, gt=0, description="Prior std on subspace coordinates.")
    lis_target: GradTargetKind = GradTargetKind.GAUSSIAN_NLL

    @field_validator("lis_target")
    @classmethod
    def _lis_is_likelihood(cls, kind: GradTargetKind) -> GradTargetKind:
        if kind not in (GradTargetKind.GAUSSIAN_NLL, GradTargetKind.STANDARDIZED_SQ_RESIDUAL):
            raise ValueError(f"lis_target must be a likelihood function, got {kind}")
        return kind


class InferenceConfig(StrictModel):
    kind: InferenceKind = InferenceKind.HMC
    n_bma: int = Field(default=30, ge=1, description="J, posterior draws used for BMA.")
    check_gradient: bool = True
    hmc: HmcHyper = HmcHyper()
    vi: ViHyper = ViHyper()


class ExperimentConfig(StrictModel):
    """Complete configuration of one experiment (all trials)."""

    experiment: ExperimentSection = ExperimentSection()
    data: DataConfig = DataConfig()
    network: NetworkConfig = NetworkConfig()
    pretrain: PretrainConfig = PretrainConfig()
    subspace: SubspaceConfig = SubspaceConfig()
    inference: InferenceConfig = InferenceConfig()

    @property
    def method(self) -> Method:
        return self.experiment.method

    def trial_seed(self, trial: int) -> int:
        return self.experiment.seed + trial

    def config_hash(self) -> str:
        """sha256 of the configuration without its output location."""
        dumped = self.model_dump_json(exclude={"experiment": {"output_dir"}})
        return hashlib.sha256(dumped.encode("utf-8")).hexdigest()


class TrialMetrics(BaseModel):
    """Metrics and timings of one trial."""

    trial: int = Field(description="Trial index.", examples=[0])
    seed: int = Field(description="Seed used by the trial.", examples=[0])
    rmse: float = Field(ge=0, description="Test RMSE in original units.", examples=[3.54])
    avg_log_lik: float = Field(description="Mean test log-likelihood in original units.", examples=[-2.76])
    coverage95: float = Field(ge=0, le=1, description="Central 95% interval coverage.", examples=[0.99])
    times: dict[str, float] = Field(description="Wall-clock seconds per stage.", default={})


class EvalReport(BaseModel):
    """Test-set evaluation of one trial or an aggregate of trials."""

    rmse: float = Field(ge=0, description="Root mean squared error.")
    avg_log_lik: float = Field(description="Average test log-likelihood.")
    coverage95: float = Field(ge=0, le=1, description="Fraction inside the central 95% interval.")
    trials: list[TrialMetrics] = Field(description="Per-trial breakdown.", default=[])
    metadata: dict[str, Any] = Field(description="Conventions and diagnostics.", default={})


class ResultRecord(BaseModel):
    """Contents of results.json."""

    config_hash: str = Field(description="sha256 of the resolved configuration.")
    input_hash: str = Field(description="git-style blob hash of the input data file, or of the generator parameters.")
    method: Method
    dataset: str
    trials: list[TrialMetrics]
    aggregate: dict[str, tuple[float, float]] = Field(
        description="Mean and std across trials per metric.",
        examples=[{"rmse": (3.54, 0.97)}],
    )
    metadata: dict[str, Any] = {}


class ServiceMetadata(BaseModel):
    """Metadata about the service including available runs."""

    runs_dir: str = Field(description="Directory the runs are read from.")
    runs: list[str] = Field(description="Names of completed runs.", examples=[["boston-as"]])


class PredictInput(BaseModel):
    """Inputs to predict for, in original feature units."""

    x: list[list[float]] = Field(
        description="Feature rows.",
        examples=[[[0.1], [0.5]]],
    )
    trial: int = Field(description="Trial whose posterior is used.", default=0, ge=0)


class PredictionOutput(BaseModel):
    """BMA predictive summary per input row, in original target units."""

    mean: list[float]
    std: list[float]
    lower: list[float] = Field(description="2.5% mixture quantile.")
    upper: list[float] = Field(description="97.5% mixture quantile.")
    n_components: int = Field(description="Number of posterior draws J in the mixture.", examples=[30])
