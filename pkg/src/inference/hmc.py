"""Hamiltonian Monte Carlo with dual-averaging step size adaptation."""

import logging
import math
from dataclasses import dataclass

import numpy as np

from core.errors import InvalidInputError, NumericError, SamplerStuckError
from core.numerics import RngStream
from inference.posterior import PosteriorSamples, TargetDensity
from schema.models import SampleSource

logger = logging.getLogger(__name__)


@dataclass
class DualAveraging:
    """Step size adaptation state (gamma=0.05, t0=10, kappa=0.75)."""

    mu: float
    target_accept: float
    log_step: float
    log_step_bar: float = 0.0
    h_bar: float = 0.0
    count: int = 0
    gamma: float = 0.05
    t0: float = 10.0
    kappa: float = 0.75

    @classmethod
    def start(cls, step_size: float, target_accept: float) -> "DualAveraging":
        # proposals are biased towards ten times the initial step
        return cls(mu=math.log(10.0 * step_size), target_accept=target_accept, log_step=math.log(step_size))

    def update(self, accept_stat: float) -> float:
        self.count += 1
        m = self.count
        eta = 1.0 / (m + self.t0)
        self.h_bar = (1.0 - eta) * self.h_bar + eta * (self.target_accept - accept_stat)
        self.log_step = self.mu - math.sqrt(m) / self.gamma * self.h_bar
        weight = m ** (-self.kappa)
        self.log_step_bar = weight * self.log_step + (1.0 - weight) * self.log_step_bar
        return math.exp(self.log_step)

    @property
    def final_step(self) -> float:
        return math.exp(self.log_step_bar) if self.count else math.exp(self.log_step)


def kinetic_energy(momentum: np.ndarray, inv_mass: np.ndarray) -> float:
    return 0.5 * float(np.sum(inv_mass * momentum * momentum))


def leapfrog(
    target: TargetDensity,
    z: np.ndarray,
    momentum: np.ndarray,
    grad: np.ndarray,
    step_size: float,
    n_steps: int,
    inv_mass: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, float, np.ndarray]:
    """Returns (z, momentum, log density, gradient) at the end of the trajectory."""
    z = z.copy()
    p = momentum + 0.5 * step_size * grad
    logp = float("nan")
    for i in range(n_steps):
        z = z + step_size * inv_mass * p
        logp, grad = target.value_and_grad(z)
        if i != n_steps - 1:
            p = p + step_size * grad
    p = p + 0.5 * step_size * grad
    return z, p, logp, grad


def _log_accept(h_start: float, h_end: float) -> float:
    delta = h_start - h_end
    return delta if math.isfinite(delta) else -math.inf


def find_reasonable_step(
    target: TargetDensity,
    z: np.ndarray,
    logp: float,
    grad: np.ndarray,
    inv_mass: np.ndarray,
    generator: np.random.Generator,
) -> float:
    """Doubles or halves a unit step until one leapfrog step crosses acceptance 1/2."""
    step = 1.0
    p = generator.standard_normal(z.shape[0]) / np.sqrt(inv_mass)
    h0 = -logp + kinetic_energy(p, inv_mass)

    def log_ratio(eps: float) -> float:
        try:
            _, p_new, logp_new, _ = leapfrog(target, z, p, grad, eps, 1, inv_mass)
        except NumericError:
            return -math.inf
        return _log_accept(h0, -logp_new + kinetic_energy(p_new, inv_mass))

    direction = 1.0 if log_ratio(step) > math.log(0.5) else -1.0
    for _ in range(100):
        ratio = log_ratio(step)
        if direction * ratio <= -direction * math.log(2.0):
            break
        step *= 2.0**direction
    return step


def hmc_run(
    target: TargetDensity,
    init: np.ndarray,
    n_leapfrog: int,
    warmup: int,
    n_samples: int,
    rng: RngStream,
    target_accept: float = 0.8,
    step_size: float | None = None,
    adapt_mass: bool = True,
    max_stuck: int = 500,
    has_log_noise: bool = False,
) -> PosteriorSamples:
    """Metropolis-corrected leapfrog HMC.

    During warmup the step size follows dual averaging towards
    ``target_accept``. With ``adapt_mass`` a diagonal inverse mass is set from
    the draws of the middle half of warmup, after which step adaptation
    restarts. The returned acceptance rate is the mean Metropolis acceptance
    probability after warmup.
    """
    if n_leapfrog < 1:
        raise InvalidInputError(f"need at least one leapfrog step, got {n_leapfrog}")
    if warmup < 0 or n_samples < 1:
        raise InvalidInputError(f"invalid warmup={warmup} or n_samples={n_samples}")
    generator = rng.generator()
    z = np.array(init, dtype=np.float64)
    if z.shape != (target.dim,):
        raise InvalidInputError(f"init has shape {z.shape}, target dimension is {target.dim}")
    logp, grad = target.value_and_grad(z)
    inv_mass = np.ones(target.dim)

    step = step_size if step_size is not None else find_reasonable_step(target, z, logp, grad, inv_mass, generator)
    if warmup > 0 and step <= 0:
        raise InvalidInputError("step size adaptation needs a positive initial step")
    adaptation = DualAveraging.start(step, target_accept) if warmup > 0 else None
    window = (warmup // 4, (3 * warmup) // 4) if adapt_mass and warmup >= 40 else None
    window_draws: list[np.ndarray] = []

    draws = np.empty((n_samples, target.dim))
    accept_sum = 0.0
    stuck = 0
    for iteration in range(warmup + n_samples):
        p = generator.standard_normal(target.dim) / np.sqrt(inv_mass)
        h_start = -logp + kinetic_energy(p, inv_mass)
        try:
            z_new, p_new, logp_new, grad_new = leapfrog(target, z, p, grad, step, n_leapfrog, inv_mass)
            log_accept = _log_accept(h_start, -logp_new + kinetic_energy(p_new, inv_mass))
        except NumericError:
            log_accept = -math.inf
        accept_stat = math.exp(min(0.0, log_accept))
        if generator.uniform() < accept_stat:
            z, logp, grad = z_new, logp_new, grad_new
            stuck = 0
        else:
            stuck += 1
            if stuck >= max_stuck:
                raise SamplerStuckError(
                    f"{stuck} consecutive rejections at iteration {iteration} (step size {step:.3g})"
                )

        if iteration < warmup:
            step = adaptation.update(accept_stat)
            if window is not None and window[0] <= iteration < window[1]:
                window_draws.append(z.copy())
                if iteration == window[1] - 1:
                    inv_mass = _regularized_variance(np.vstack(window_draws))
                    step = find_reasonable_step(target, z, logp, grad, inv_mass, generator)
                    adaptation = DualAveraging.start(step, target_accept)
                    logger.debug(f"mass adapted: inv mass range [{inv_mass.min():.3g}, {inv_mass.max():.3g}]")
            if iteration == warmup - 1:
                step = adaptation.final_step
                logger.debug(f"warmup done, step size {step:.4g}")
        else:
            draws[iteration - warmup] = z
            accept_sum += accept_stat

    acceptance = accept_sum / n_samples
    logger.info(f"hmc: {n_samples} draws, acceptance {acceptance:.3f}, step size {step:.4g}")
    return PosteriorSamples(
        draws=draws,
        source=SampleSource.HMC,
        acceptance_rate=acceptance,
        step_size=step,
        has_log_noise=has_log_noise,
    )


def _regularized_variance(window: np.ndarray) -> np.ndarray:
    n = window.shape[0]
    variance = window.var(axis=0, ddof=1) if n > 1 else np.ones(window.shape[1])
    return (n / (n + 5.0)) * variance + 1e-3 * (5.0 / (n + 5.0))
