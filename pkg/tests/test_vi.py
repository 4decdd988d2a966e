import math

import numpy as np
import pytest
from scipy.stats import norm

from core.errors import InvalidInputError, NumericError, TrainingDivergedError
from core.numerics import RngStream
from inference.posterior import TargetDensity
from inference.vi import Adam, VariationalParams, elbo_estimate, fit_vi, kl_diag_gaussians
from schema.schema import ViHyper


def gaussian_likelihood(mean: np.ndarray, std: np.ndarray) -> TargetDensity:
    def value_and_grad(z):
        return float(np.sum(norm.logpdf(z, loc=mean, scale=std))), -(z - mean) / std**2

    return TargetDensity(dim=mean.shape[0], value_and_grad=value_and_grad)


def params(mean, std) -> VariationalParams:
    return VariationalParams(mean=np.asarray(mean, dtype=float), log_std=np.log(np.asarray(std, dtype=float)))


def test_kl_closed_forms():
    assert kl_diag_gaussians(params([0.0, 0.0], [1.0, 1.0]), 1.0) == pytest.approx(0.0, abs=1e-15)
    assert kl_diag_gaussians(params([1.0], [1.0]), 1.0) == pytest.approx(0.5)
    assert kl_diag_gaussians(params([0.0], [2.0]), 1.0) == pytest.approx(1.5 - math.log(2.0))
    assert kl_diag_gaussians(params([3.0], [0.5]), 0.5, prior_mean=3.0) == pytest.approx(0.0, abs=1e-15)


def test_kl_per_coordinate_prior():
    q = params([0.0, 1.0], [1.0, 1.0])
    per_coordinate = kl_diag_gaussians(q, np.array([1.0, 2.0]), np.array([0.0, 1.0]))
    assert per_coordinate == pytest.approx(math.log(2.0) + 0.5 * 0.25 - 0.5)


def test_variational_params_validation():
    with pytest.raises(InvalidInputError):
        VariationalParams(mean=np.zeros(2), log_std=np.zeros(3))
    with pytest.raises(NumericError):
        VariationalParams(mean=np.array([np.nan]), log_std=np.zeros(1))


def test_sample_shape_and_zero_spread():
    q = VariationalParams(mean=np.array([1.0, -1.0]), log_std=np.full(2, -800.0))
    draws = q.sample(4, np.random.default_rng(0))
    np.testing.assert_array_equal(draws, np.tile([1.0, -1.0], (4, 1)))


def test_conjugate_elbo_equals_evidence():
    y = 0.8
    likelihood = TargetDensity(dim=1, value_and_grad=lambda z: (float(norm.logpdf(y, loc=z[0])), np.array([y - z[0]])))
    posterior = params([y / 2.0], [math.sqrt(0.5)])
    estimate = elbo_estimate(posterior, likelihood, 20_000, RngStream(1))
    assert estimate == pytest.approx(norm.logpdf(y, scale=math.sqrt(2.0)), abs=0.02)


def test_elbo_errors():
    likelihood = gaussian_likelihood(np.zeros(2), np.ones(2))
    q = params([0.0, 0.0], [1.0, 1.0])
    with pytest.raises(InvalidInputError):
        elbo_estimate(q, likelihood, 0, RngStream(0))
    with pytest.raises(InvalidInputError):
        elbo_estimate(params([0.0], [1.0]), likelihood, 4, RngStream(0))
    broken = TargetDensity(dim=2, value_and_grad=lambda z: (float("nan"), np.zeros(2)))
    with pytest.raises(NumericError) as excinfo:
        elbo_estimate(q, broken, 4, RngStream(0))
    assert excinfo.value.z.shape == (2,)


def test_adam_first_step_has_learning_rate_size():
    adam = Adam.zeros(3, 0.9, 0.999)
    update = adam.step(np.array([2.0, -0.5, 1e-3]), 0.1)
    np.testing.assert_allclose(update, [0.1, -0.1, 0.1], rtol=1e-4)


def test_fit_recovers_gaussian_target():
    mean, std = np.array([1.0, -2.0]), np.array([0.5, 2.0])
    hyper = ViHyper(steps=4000, learning_rate=0.05, lr_final_fraction=0.05, init_std=0.1)
    q = fit_vi(gaussian_likelihood(mean, std), hyper, RngStream(2), prior_std=100.0)
    np.testing.assert_allclose(q.mean, mean, atol=0.15)
    np.testing.assert_allclose(q.std, std, rtol=0.2)
    assert q.history.shape == (4000,)
    assert q.history[-200:].mean() > q.history[:200].mean()


def test_fit_with_prior_shrinks_towards_prior():
    # likelihood N(z; 2, 1) with prior N(0, 1): posterior N(1, 1/2)
    hyper = ViHyper(steps=4000, learning_rate=0.05, lr_final_fraction=0.05, init_std=0.1)
    q = fit_vi(gaussian_likelihood(np.array([2.0]), np.array([1.0])), hyper, RngStream(3))
    assert q.mean[0] == pytest.approx(1.0, abs=0.1)
    assert q.std[0] == pytest.approx(math.sqrt(0.5), rel=0.2)


def test_fit_is_deterministic():
    hyper = ViHyper(steps=50)
    likelihood = gaussian_likelihood(np.zeros(3), np.ones(3))
    a = fit_vi(likelihood, hyper, RngStream(4), init_mean=np.ones(3), has_log_noise=True)
    b = fit_vi(likelihood, hyper, RngStream(4), init_mean=np.ones(3), has_log_noise=True)
    np.testing.assert_array_equal(a.mean, b.mean)
    np.testing.assert_array_equal(a.log_std, b.log_std)
    assert a.has_log_noise


def test_fit_errors():
    likelihood = gaussian_likelihood(np.zeros(2), np.ones(2))
    with pytest.raises(InvalidInputError):
        fit_vi(likelihood, ViHyper(steps=5), RngStream(0), init_mean=np.zeros(3))
    diverging = TargetDensity(dim=2, value_and_grad=lambda z: (0.0, np.full(2, np.inf)))
    with pytest.raises(TrainingDivergedError) as excinfo:
        fit_vi(diverging, ViHyper(steps=5), RngStream(0))
    assert excinfo.value.last_finite.shape == (4,)


def test_fit_recovers_one_dimensional_target():
    hyper = ViHyper(steps=5000, learning_rate=0.05, lr_final_fraction=0.02, init_std=0.1)
    q = fit_vi(gaussian_likelihood(np.array([2.0]), np.array([0.5])), hyper, RngStream(5), prior_std=1e3)
    assert q.mean[0] == pytest.approx(2.0, abs=0.05)
    assert q.std[0] == pytest.approx(0.5, rel=0.1)


def test_kl_non_negative_over_random_params():
    generator = np.random.default_rng(17)
    for _ in range(100):
        dim = int(generator.integers(1, 6))
        q = VariationalParams(mean=generator.normal(0.0, 3.0, dim), log_std=generator.normal(0.0, 2.0, dim))
        prior_std = np.exp(generator.normal(0.0, 1.0, dim))
        prior_mean = generator.normal(0.0, 2.0, dim)
        assert kl_diag_gaussians(q, prior_std) >= 0.0
        assert kl_diag_gaussians(q, prior_std, prior_mean) >= 0.0
