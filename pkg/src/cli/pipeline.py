"""End-to-end experiment: pretrain, subspace, inference and evaluation per trial.

Each stage persists its artifact in the trial directory, so a run can be
resumed from any stage with the earlier artifacts read back from disk.
"""

import hashlib
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from cli import artifacts
from cli.artifacts import trial_dir, write_json
from core.errors import DataIOError, InvalidInputError, StageError, SubspaceInferenceError
from core.numerics import RngStream
from data.datasets import Dataset, Scaler, gen_sine, load_csv, split, standardize
from inference.hmc import hmc_run
from inference.posterior import (
    PosteriorSamples,
    check_gradient,
    make_target,
    noise_model_for,
    prior_moments,
)
from inference.predictive import (
    averaged_weight_diagnostic,
    bma_predictive,
    draw_posterior,
    load_posterior_csv,
    save_posterior_csv,
)
from inference.vi import elbo_estimate, fit_vi
from metrics.evaluation import evaluate
from network.mlp import forward_batch
from pretrain.checkpoint import load_checkpoint, save_checkpoint
from pretrain.sgd import iterate_deviations, residual_log_noise, train_map
from schema.models import DataKind, GradientKind, InferenceKind, Method, NoiseModel, SampleSource, Stage
from schema.schema import EvalReport, ExperimentConfig, MlpConfig, ResultRecord, TrialMetrics
from subspace.projection import (
    SubspaceModel,
    default_sigma0,
    pca_projection_from_deviations,
    projection_from_gradients,
    sample_gradient_matrix,
    spectrum_fraction,
)
from subspace.storage import save_projection

logger = logging.getLogger(__name__)

STAGES: tuple[Stage, ...] = (Stage.PRETRAIN, Stage.SUBSPACE, Stage.INFERENCE, Stage.EVAL)

# stream ids under each trial seed; pretraining uses 1 and 2
TRAIN_DATA_STREAM = 10
TEST_DATA_STREAM = 11
SPLIT_STREAM = 12
GRADIENT_STREAM = 20
CHECK_STREAM = 30
SAMPLER_STREAM = 31
DRAW_STREAM = 32
ELBO_STREAM = 33

# the pipeline's own gradient check is looser than the unit-level oracle
CHECK_RTOL = 1e-4
CHECK_ATOL = 1e-5


def git_blob_hash(content: bytes) -> str:
    """sha1 of the content as git would store it as a blob."""
    return hashlib.sha1(b"blob %d\x00" % len(content) + content).hexdigest()


def input_hash(config: ExperimentConfig) -> str:
    if config.data.kind == DataKind.CSV:
        return git_blob_hash(config.data.path.read_bytes())
    return git_blob_hash(config.data.model_dump_json().encode("utf-8"))


@dataclass
class TrialContext:
    config: ExperimentConfig
    trial: int
    directory: Path
    train: Dataset
    test: Dataset
    mlp: MlpConfig
    times: dict[str, float] = field(default_factory=dict)

    @property
    def seed(self) -> int:
        return self.config.trial_seed(self.trial)

    def rng(self, stream: int) -> RngStream:
        return RngStream(self.seed, stream)

    @property
    def scaler(self) -> Scaler:
        return self.train.scaler or Scaler.identity(self.train.p)

    @property
    def noise(self) -> NoiseModel:
        return noise_model_for(self.mlp)


def prepare_data(config: ExperimentConfig, seed: int, source: Dataset | None = None) -> tuple[Dataset, Dataset]:
    """Train and test splits of one trial, standardized when configured."""
    data = config.data
    if data.kind == DataKind.SINE:
        name = data.dataset_name
        train = gen_sine(data.n, data.noise_std, RngStream(seed, TRAIN_DATA_STREAM), name=name)
        test = gen_sine(data.n_test, data.noise_std, RngStream(seed, TEST_DATA_STREAM), name=name)
    else:
        if source is None:
            source = load_csv(data.path, data.target, name=data.dataset_name)
        train, test = split(source, data.test_fraction, RngStream(seed, SPLIT_STREAM))
    if data.use_standardization:
        train, test, _ = standardize(train, test)
    return train, test


def run_pretrain(ctx: TrialContext) -> None:
    trajectory = train_map(ctx.mlp, ctx.train, ctx.config.pretrain.hyper(ctx.seed))
    save_checkpoint(ctx.mlp, trajectory.swa_mean, ctx.directory / artifacts.CHECKPOINT_FILE)
    artifacts.save_scaler(ctx.scaler, ctx.directory / artifacts.SCALER_FILE)
    if ctx.config.method == Method.PCA:
        deviations = iterate_deviations(trajectory, ctx.config.subspace.n_gradients)
        np.save(ctx.directory / artifacts.DEVIATIONS_FILE, deviations)


def _load_anchor(ctx: TrialContext) -> np.ndarray:
    return load_checkpoint(ctx.mlp, ctx.directory / artifacts.CHECKPOINT_FILE)


def run_subspace(ctx: TrialContext) -> None:
    method = ctx.config.method
    if method in (Method.SGD, Method.FULL):
        logger.debug(f"trial {ctx.trial}: {method} needs no subspace")
        return
    sub = ctx.config.subspace
    if method == Method.PCA:
        path = ctx.directory / artifacts.DEVIATIONS_FILE
        if not path.is_file():
            raise DataIOError(f"missing artifact {path}")
        deviations = np.load(path)
        projection = pca_projection_from_deviations(deviations, sub.dim)
        total = float(np.sum(deviations**2) / deviations.shape[0])
        sigma0 = None
    else:
        anchor = _load_anchor(ctx)
        sigma0 = sub.perturbation_std if sub.perturbation_std is not None else default_sigma0(anchor)
        gradients = sample_gradient_matrix(
            GradientKind(method.value),
            ctx.mlp,
            anchor,
            sigma0,
            sub.n_gradients,
            ctx.train,
            ctx.rng(GRADIENT_STREAM),
            lis_target=sub.lis_target,
        )
        projection = projection_from_gradients(gradients, sub.dim)
        total = float(np.sum(gradients.matrix**2) / gradients.n_samples)
    save_projection(projection, ctx.directory / artifacts.PROJECTION_FILE)
    fraction = spectrum_fraction(projection, total)
    write_json(
        ctx.directory / artifacts.SUBSPACE_FILE,
        {"spectrum": projection.spectrum.tolist(), "spectrum_fraction": fraction, "sigma0": sigma0},
    )
    logger.info(f"trial {ctx.trial}: {method} subspace K={projection.k} keeps {fraction:.1%} of the spectrum")


def _initial_point(ctx: TrialContext, model: SubspaceModel, anchor: np.ndarray) -> np.ndarray:
    init = anchor.copy() if ctx.config.method == Method.FULL else np.zeros(model.k)
    if ctx.noise == NoiseModel.GLOBAL:
        init = np.append(init, residual_log_noise(ctx.mlp, anchor, ctx.train))
    return init


def _point_samples(ctx: TrialContext, model: SubspaceModel, anchor: np.ndarray) -> PosteriorSamples:
    draw = np.zeros(model.k)
    if ctx.noise == NoiseModel.GLOBAL:
        draw = np.append(draw, residual_log_noise(ctx.mlp, anchor, ctx.train))
    return PosteriorSamples(draws=draw[None, :], source=SampleSource.POINT, has_log_noise=ctx.noise == NoiseModel.GLOBAL)


def run_inference(ctx: TrialContext) -> None:
    inference = ctx.config.inference
    anchor = _load_anchor(ctx)
    model = artifacts.load_subspace_model(ctx.config, ctx.mlp, ctx.directory)
    has_log_noise = ctx.noise == NoiseModel.GLOBAL
    summary: dict[str, object] = {"kind": inference.kind.value}

    if ctx.config.method == Method.SGD:
        samples = _point_samples(ctx, model, anchor)
        summary = {"kind": "point"}
    else:
        init = _initial_point(ctx, model, anchor)
        hmc = inference.kind == InferenceKind.HMC
        target = make_target(model, ctx.mlp, ctx.train, ctx.noise, include_prior=hmc)
        if inference.check_gradient:
            worst = check_gradient(target, init, ctx.rng(CHECK_STREAM), rtol=CHECK_RTOL, atol=CHECK_ATOL)
            summary["gradient_check_max_rel_err"] = worst
        if hmc:
            h = inference.hmc
            chain = hmc_run(
                target,
                init,
                n_leapfrog=h.n_leapfrog,
                warmup=h.warmup,
                n_samples=h.n_samples,
                rng=ctx.rng(SAMPLER_STREAM),
                target_accept=h.target_accept,
                step_size=h.step_size,
                adapt_mass=h.adapt_mass,
                max_stuck=h.max_stuck,
                has_log_noise=has_log_noise,
            )
            samples = draw_posterior(chain, inference.n_bma)
            summary.update(acceptance_rate=chain.acceptance_rate, step_size=chain.step_size)
        else:
            prior_mean, prior_std = prior_moments(model, ctx.noise)
            q = fit_vi(
                target,
                inference.vi,
                ctx.rng(SAMPLER_STREAM),
                prior_mean=prior_mean,
                prior_std=prior_std,
                init_mean=init,
                has_log_noise=has_log_noise,
            )
            samples = draw_posterior(q, inference.n_bma, ctx.rng(DRAW_STREAM))
            summary["elbo"] = elbo_estimate(
                q, target, inference.vi.n_mc_eval, ctx.rng(ELBO_STREAM), prior_mean=prior_mean, prior_std=prior_std
            )
    summary["source"] = samples.source.value
    save_posterior_csv(samples, ctx.directory / artifacts.POSTERIOR_FILE)
    write_json(ctx.directory / artifacts.INFERENCE_FILE, summary)


def run_eval(ctx: TrialContext) -> EvalReport:
    inference = artifacts.read_json(ctx.directory / artifacts.INFERENCE_FILE)
    samples = load_posterior_csv(ctx.directory / artifacts.POSTERIOR_FILE, SampleSource(inference["source"]))
    model = artifacts.load_subspace_model(ctx.config, ctx.mlp, ctx.directory)
    scaler = ctx.scaler
    mixture = bma_predictive(model, samples, ctx.mlp, ctx.test.features, ctx.noise).to_original(scaler)
    targets = scaler.inverse_y(ctx.test.targets)

    theta_bar = averaged_weight_diagnostic(model, samples)
    averaged_mean = scaler.inverse_y(forward_batch(ctx.mlp, theta_bar, ctx.test.features).mean)
    metadata: dict[str, object] = {
        "method": ctx.config.method.value,
        "prior_std": ctx.config.subspace.prior_std,
        "n_components": mixture.n_components,
        "averaged_weight_rmse": float(np.sqrt(np.mean((averaged_mean - targets) ** 2))),
        "epistemic_std_mean": float(mixture.epistemic_std.mean()),
        "inference": inference,
    }
    subspace_file = ctx.directory / artifacts.SUBSPACE_FILE
    if subspace_file.is_file():
        metadata.update(artifacts.read_json(subspace_file))
    report = evaluate(mixture, targets, metadata)
    write_json(ctx.directory / artifacts.REPORT_FILE, report.model_dump(mode="json"))
    logger.info(
        f"trial {ctx.trial}: rmse {report.rmse:.4f}, avg log-lik {report.avg_log_lik:.4f}, "
        f"coverage {report.coverage95:.3f}"
    )
    return report


_RUNNERS = {
    Stage.PRETRAIN: run_pretrain,
    Stage.SUBSPACE: run_subspace,
    Stage.INFERENCE: run_inference,
}


def run_trial(
    config: ExperimentConfig,
    trial: int,
    run_dir: Path,
    start: Stage = Stage.PRETRAIN,
    source: Dataset | None = None,
) -> TrialMetrics:
    """Runs the stages from ``start`` on; failures are wrapped with stage and trial."""
    seed = config.trial_seed(trial)
    directory = trial_dir(run_dir, trial)
    directory.mkdir(parents=True, exist_ok=True)
    stage = Stage.PRETRAIN
    try:
        train, test = prepare_data(config, seed, source)
        ctx = TrialContext(config, trial, directory, train, test, config.network.mlp(train.p))
        report = None
        for stage in STAGES[STAGES.index(start) :]:
            began = time.perf_counter()
            if stage == Stage.EVAL:
                report = run_eval(ctx)
            else:
                _RUNNERS[stage](ctx)
            ctx.times[stage.value] = time.perf_counter() - began
            logger.info(f"trial {trial}: {stage} done in {ctx.times[stage.value]:.2f}s")
    except SubspaceInferenceError as e:
        raise StageError(stage.value, trial, e) from e
    return TrialMetrics(
        trial=trial,
        seed=seed,
        rmse=report.rmse,
        avg_log_lik=report.avg_log_lik,
        coverage95=report.coverage95,
        times=ctx.times,
    )


def aggregate(trials: list[TrialMetrics]) -> dict[str, tuple[float, float]]:
    """mean and population std across trials per metric."""
    result = {}
    for metric in ("rmse", "avg_log_lik", "coverage95"):
        values = np.array([getattr(t, metric) for t in trials])
        result[metric] = (float(values.mean()), float(values.std()))
    return result


def run_experiment(
    config: ExperimentConfig,
    run_dir: Path,
    start: Stage = Stage.PRETRAIN,
    threads: int = 1,
) -> ResultRecord:
    """All trials of an experiment, up to ``threads`` at a time; writes results.json."""
    if threads < 1:
        raise InvalidInputError(f"threads must be >= 1, got {threads}")
    run_dir.mkdir(parents=True, exist_ok=True)
    write_json(run_dir / artifacts.CONFIG_FILE, config.model_dump(mode="json"))
    source = None
    if config.data.kind == DataKind.CSV:
        source = load_csv(config.data.path, config.data.target, name=config.data.dataset_name)

    trial_ids = range(config.experiment.trials)
    logger.info(f"running {len(trial_ids)} trial(s) of {config.method} into {run_dir} from stage {start}")
    if threads == 1:
        trials = [run_trial(config, t, run_dir, start, source) for t in trial_ids]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trials = list(pool.map(lambda t: run_trial(config, t, run_dir, start, source), trial_ids))

    record = ResultRecord(
        config_hash=config.config_hash(),
        input_hash=input_hash(config),
        method=config.method,
        dataset=config.data.dataset_name,
        trials=trials,
        aggregate=aggregate(trials),
        metadata={
            "prior_std": config.subspace.prior_std,
            "inference": config.inference.kind.value,
            "subspace_dim": config.subspace.dim,
            "log_likelihood_units": "original",
            "std_ddof": 0,
        },
    )
    write_json(run_dir / artifacts.RESULTS_FILE, record.model_dump(mode="json"))
    rmse_mean, rmse_std = record.aggregate["rmse"]
    logger.info(f"{record.dataset} {record.method}: rmse {rmse_mean:.4f} ± {rmse_std:.4f}")
    return record
