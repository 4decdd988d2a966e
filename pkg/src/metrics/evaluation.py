"""Test-set metrics of predictive mixtures: RMSE, log-likelihood and coverage."""

import logging
from typing import Any

import numpy as np
from scipy.special import logsumexp
from scipy.stats import norm

from core.errors import InvalidInputError, NumericDomainError, NumericError
from inference.predictive import PredictiveMixture
from schema.schema import EvalReport

logger = logging.getLogger(__name__)

QUANTILE_TOL = 1e-6
_MAX_BISECTIONS = 200
_BRACKET_SCALE = 40.0


def _check_lengths(mixture: PredictiveMixture, targets: np.ndarray) -> np.ndarray:
    targets = np.asarray(targets, dtype=np.float64).reshape(-1)
    if targets.shape[0] != mixture.n_points:
        raise InvalidInputError(f"{mixture.n_points} mixtures but {targets.shape[0]} targets")
    return targets


def rmse(mixture: PredictiveMixture, targets: np.ndarray) -> float:
    targets = _check_lengths(mixture, targets)
    return float(np.sqrt(np.mean((mixture.mean - targets) ** 2)))


def avg_log_likelihood(mixture: PredictiveMixture, targets: np.ndarray) -> float:
    """mean_i log((1/J) sum_j N(y_i; mu_ij, v_ij)), via log-sum-exp."""
    targets = _check_lengths(mixture, targets)
    if np.any(mixture.variances <= 0):
        raise NumericDomainError("log-likelihood needs strictly positive component variances")
    log_pdf = norm.logpdf(targets[:, None], loc=mixture.means, scale=np.sqrt(mixture.variances))
    per_point = logsumexp(log_pdf, axis=1) - np.log(mixture.n_components)
    return float(np.mean(per_point))


def mixture_cdf(mixture: PredictiveMixture, y: np.ndarray) -> np.ndarray:
    """Mixture CDF at one value per test point; zero-variance components are steps."""
    y = np.asarray(y, dtype=np.float64).reshape(-1, 1)
    scale = np.sqrt(mixture.variances)
    with np.errstate(divide="ignore", invalid="ignore"):
        component = np.where(scale > 0, norm.cdf((y - mixture.means) / scale), (y >= mixture.means).astype(float))
    return component.mean(axis=1)


def mixture_quantile(mixture: PredictiveMixture, q: float, tol: float = QUANTILE_TOL) -> np.ndarray:
    """q-quantile of every mixture by bisection on its CDF.

    Mixtures with an infinite-variance component get an infinite quantile.
    """
    if not 0.0 < q < 1.0:
        raise InvalidInputError(f"quantile level must lie in (0, 1), got {q}")
    unbounded = np.any(np.isinf(mixture.variances), axis=1)
    result = np.full(mixture.n_points, np.inf if q > 0.5 else -np.inf)
    if np.all(unbounded):
        return result
    bounded = PredictiveMixture(means=mixture.means[~unbounded], variances=mixture.variances[~unbounded])
    spread = _BRACKET_SCALE * np.sqrt(bounded.variances)
    lo = np.min(bounded.means - spread, axis=1) - 1.0
    hi = np.max(bounded.means + spread, axis=1) + 1.0
    if np.any(mixture_cdf(bounded, lo) > q) or np.any(mixture_cdf(bounded, hi) < q):
        raise NumericError(f"bisection bracket does not contain the {q} quantile")
    for _ in range(_MAX_BISECTIONS):
        if np.all(hi - lo <= tol):
            break
        mid = 0.5 * (lo + hi)
        below = mixture_cdf(bounded, mid) < q
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    else:
        raise NumericError(f"bisection for the {q} quantile did not reach tolerance {tol}")
    result[~unbounded] = 0.5 * (lo + hi)
    return result


def interval95(mixture: PredictiveMixture) -> tuple[np.ndarray, np.ndarray]:
    return mixture_quantile(mixture, 0.025), mixture_quantile(mixture, 0.975)


def coverage95(mixture: PredictiveMixture, targets: np.ndarray) -> float:
    """fraction of targets inside the central 95% mixture interval."""
    targets = _check_lengths(mixture, targets)
    lower, upper = interval95(mixture)
    return float(np.mean((targets >= lower) & (targets <= upper)))


def evaluate(
    mixture: PredictiveMixture,
    targets: np.ndarray,
    metadata: dict[str, Any] | None = None,
) -> EvalReport:
    """All three metrics; the mixture and targets must already be in original units."""
    report = EvalReport(
        rmse=rmse(mixture, targets),
        avg_log_lik=avg_log_likelihood(mixture, targets),
        coverage95=coverage95(mixture, targets),
        metadata={"log_likelihood_units": "original", **(metadata or {})},
    )
    logger.debug(
        f"rmse {report.rmse:.4f}, avg log-lik {report.avg_log_lik:.4f}, coverage {report.coverage95:.3f}"
    )
    return report
