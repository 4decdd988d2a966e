"""Mean-field Gaussian variational inference over subspace coordinates."""

import logging
from dataclasses import dataclass, field

import numpy as np

from core.errors import InvalidInputError, NumericError, TrainingDivergedError
from core.numerics import RngStream
from inference.posterior import TargetDensity
from schema.schema import ViHyper

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VariationalParams:
    mean: np.ndarray
    log_std: np.ndarray
    has_log_noise: bool = False
    history: np.ndarray = field(default_factory=lambda: np.empty(0))
    """single-sample ELBO estimate per optimizer step."""

    def __post_init__(self) -> None:
        if self.mean.shape != self.log_std.shape or self.mean.ndim != 1:
            raise InvalidInputError(f"mean {self.mean.shape} and log std {self.log_std.shape} must be equal 1-d")
        if not (np.all(np.isfinite(self.mean)) and np.all(np.isfinite(self.log_std))):
            raise NumericError("variational parameters are not finite")

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @property
    def std(self) -> np.ndarray:
        return np.exp(self.log_std)

    def sample(self, n: int, generator: np.random.Generator) -> np.ndarray:
        return self.mean + self.std * generator.standard_normal((n, self.dim))


def kl_diag_gaussians(
    q: VariationalParams,
    prior_std: float | np.ndarray,
    prior_mean: float | np.ndarray = 0.0,
) -> float:
    """KL(q || N(prior_mean, prior_std^2 I)) in closed form."""
    prior_std = np.broadcast_to(np.asarray(prior_std, dtype=np.float64), q.mean.shape)
    prior_mean = np.broadcast_to(np.asarray(prior_mean, dtype=np.float64), q.mean.shape)
    var_ratio = np.exp(2.0 * q.log_std) / prior_std**2
    return float(
        np.sum(
            np.log(prior_std) - q.log_std
            + 0.5 * (var_ratio + (q.mean - prior_mean) ** 2 / prior_std**2)
            - 0.5
        )
    )


def elbo_estimate(
    q: VariationalParams,
    log_likelihood: TargetDensity,
    n_mc: int,
    rng: RngStream,
    prior_mean: float | np.ndarray = 0.0,
    prior_std: float | np.ndarray = 1.0,
) -> float:
    """Reparameterized Monte Carlo estimate of E_q[log p(D|z)] - KL(q || prior)."""
    if n_mc < 1:
        raise InvalidInputError(f"n_mc must be >= 1, got {n_mc}")
    if log_likelihood.dim != q.dim:
        raise InvalidInputError(f"target has dimension {log_likelihood.dim}, q has {q.dim}")
    draws = q.sample(n_mc, rng.generator())
    values = np.array([log_likelihood.log_density(z) for z in draws])
    if not np.all(np.isfinite(values)):
        bad = int(np.flatnonzero(~np.isfinite(values))[0])
        raise NumericError("log likelihood is not finite at a variational sample", z=draws[bad])
    return float(values.mean()) - kl_diag_gaussians(q, prior_std, prior_mean)


@dataclass
class Adam:
    """Adam moment state for gradient ascent."""

    beta1: float
    beta2: float
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    eps: float = 1e-8

    @classmethod
    def zeros(cls, dim: int, beta1: float, beta2: float) -> "Adam":
        return cls(beta1=beta1, beta2=beta2, m=np.zeros(dim), v=np.zeros(dim))

    def step(self, grad: np.ndarray, lr: float) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1**self.t)
        v_hat = self.v / (1.0 - self.beta2**self.t)
        return lr * m_hat / (np.sqrt(v_hat) + self.eps)


def fit_vi(
    log_likelihood: TargetDensity,
    hyper: ViHyper,
    rng: RngStream,
    prior_mean: float | np.ndarray = 0.0,
    prior_std: float | np.ndarray = 1.0,
    init_mean: np.ndarray | None = None,
    has_log_noise: bool = False,
) -> VariationalParams:
    """Fits q = N(mean, diag(exp(log_std))^2) by Adam ascent on the ELBO.

    Each step uses one reparameterized sample for the likelihood term; the KL
    term and its gradient are exact. The learning rate decays geometrically
    from ``hyper.learning_rate`` to ``hyper.lr_final_fraction`` of it.
    """
    dim = log_likelihood.dim
    prior_std = np.broadcast_to(np.asarray(prior_std, dtype=np.float64), (dim,))
    prior_mean = np.broadcast_to(np.asarray(prior_mean, dtype=np.float64), (dim,))
    mean = np.zeros(dim) if init_mean is None else np.array(init_mean, dtype=np.float64)
    if mean.shape != (dim,):
        raise InvalidInputError(f"init mean has shape {mean.shape}, target dimension is {dim}")
    log_std = np.full(dim, np.log(hyper.init_std))

    generator = rng.generator()
    adam = Adam.zeros(2 * dim, hyper.beta1, hyper.beta2)
    decay = hyper.lr_final_fraction ** (1.0 / max(1, hyper.steps - 1))
    history = np.empty(hyper.steps)
    for step in range(hyper.steps):
        std = np.exp(log_std)
        eps = generator.standard_normal(dim)
        z = mean + std * eps
        value, grad = log_likelihood.value_and_grad(z)
        # KL gradients: d/dmean = (mean - mu0)/s0^2, d/dlog_std = std^2/s0^2 - 1
        d_mean = grad - (mean - prior_mean) / prior_std**2
        d_log_std = grad * eps * std + 1.0 - std**2 / prior_std**2
        full = np.concatenate([d_mean, d_log_std])
        if not np.all(np.isfinite(full)):
            raise TrainingDivergedError(
                f"variational gradient became non-finite at step {step}",
                last_finite=np.concatenate([mean, log_std]),
            )
        update = adam.step(full, hyper.learning_rate * decay**step)
        mean = mean + update[:dim]
        log_std = log_std + update[dim:]
        q_now = VariationalParams(mean=mean, log_std=log_std)
        history[step] = value - kl_diag_gaussians(q_now, prior_std, prior_mean)
        if step % max(1, hyper.steps // 10) == 0:
            logger.debug(f"vi step {step}: elbo {history[step]:.4f}")

    tail = history[-max(1, hyper.steps // 5) :]
    logger.info(f"vi: {hyper.steps} steps, final elbo (mean of last 20%) {tail.mean():.4f}")
    return VariationalParams(mean=mean, log_std=log_std, has_log_noise=has_log_noise, history=history)
