import math

import numpy as np
import pytest

from core.errors import InvalidInputError, NumericError, SamplerStuckError
from core.numerics import RngStream
from inference.hmc import DualAveraging, hmc_run, kinetic_energy, leapfrog
from inference.posterior import TargetDensity
from schema.models import SampleSource


def standard_normal(dim: int) -> TargetDensity:
    return TargetDensity(dim=dim, value_and_grad=lambda z: (float(-0.5 * z @ z), -z))


def test_leapfrog_conserves_energy():
    target = standard_normal(3)
    z = np.array([1.0, -0.5, 0.2])
    p = np.array([0.3, 0.1, -1.0])
    inv_mass = np.ones(3)
    logp, grad = target.value_and_grad(z)
    z_new, p_new, logp_new, _ = leapfrog(target, z, p, grad, 0.01, 100, inv_mass)
    h0 = -logp + kinetic_energy(p, inv_mass)
    h1 = -logp_new + kinetic_energy(p_new, inv_mass)
    assert abs(h1 - h0) < 1e-4
    assert not np.allclose(z_new, z)


def test_leapfrog_is_reversible():
    target = standard_normal(2)
    z = np.array([0.7, -1.2])
    p = np.array([0.4, 0.9])
    inv_mass = np.array([1.0, 2.0])
    z1, p1, _, g1 = leapfrog(target, z, p, target.grad(z), 0.1, 15, inv_mass)
    z2, p2, _, _ = leapfrog(target, z1, -p1, g1, 0.1, 15, inv_mass)
    np.testing.assert_allclose(z2, z, atol=1e-12)
    np.testing.assert_allclose(-p2, p, atol=1e-12)


def test_dual_averaging_shrinks_step_on_rejections():
    adaptation = DualAveraging.start(1.0, 0.8)
    steps = [adaptation.update(0.0) for _ in range(20)]
    assert steps[-1] < 1.0
    assert adaptation.final_step < 1.0


def test_dual_averaging_grows_step_on_acceptance():
    adaptation = DualAveraging.start(0.01, 0.8)
    for _ in range(20):
        adaptation.update(1.0)
    assert adaptation.final_step > 0.01


def test_standard_normal_moments():
    samples = hmc_run(standard_normal(5), np.zeros(5), n_leapfrog=10, warmup=1000, n_samples=5000, rng=RngStream(1))
    assert samples.source == SampleSource.HMC
    assert samples.draws.shape == (5000, 5)
    assert np.all(np.abs(samples.draws.mean(axis=0)) <= 0.1)
    assert np.all(np.abs(samples.draws.var(axis=0) - 1.0) <= 0.15)
    assert 0.6 <= samples.acceptance_rate <= 0.95
    assert samples.step_size > 0


def test_scaled_target_with_mass_adaptation():
    scales = np.array([0.1, 1.0, 5.0])
    target = TargetDensity(
        dim=3, value_and_grad=lambda z: (float(-0.5 * np.sum((z / scales) ** 2)), -z / scales**2)
    )
    samples = hmc_run(target, np.zeros(3), n_leapfrog=10, warmup=400, n_samples=1500, rng=RngStream(2))
    np.testing.assert_allclose(samples.draws.std(axis=0), scales, rtol=0.3)


def test_is_deterministic_per_seed():
    target = standard_normal(2)
    a = hmc_run(target, np.zeros(2), 5, 50, 30, RngStream(3))
    b = hmc_run(target, np.zeros(2), 5, 50, 30, RngStream(3))
    np.testing.assert_array_equal(a.draws, b.draws)
    c = hmc_run(target, np.zeros(2), 5, 50, 30, RngStream(4))
    assert not np.array_equal(a.draws, c.draws)


def test_zero_step_without_warmup_repeats_init():
    init = np.array([0.5, -0.5])
    samples = hmc_run(standard_normal(2), init, 3, 0, 10, RngStream(5), step_size=0.0)
    np.testing.assert_array_equal(samples.draws, np.tile(init, (10, 1)))
    assert samples.acceptance_rate == 1.0


def test_zero_step_with_warmup_is_rejected():
    with pytest.raises(InvalidInputError):
        hmc_run(standard_normal(2), np.zeros(2), 3, 10, 10, RngStream(5), step_size=0.0)


def test_invalid_arguments():
    target = standard_normal(2)
    with pytest.raises(InvalidInputError):
        hmc_run(target, np.zeros(2), 0, 10, 10, RngStream(0))
    with pytest.raises(InvalidInputError):
        hmc_run(target, np.zeros(2), 3, 10, 0, RngStream(0))
    with pytest.raises(InvalidInputError):
        hmc_run(target, np.zeros(3), 3, 10, 10, RngStream(0))


def test_numeric_failures_are_rejections_until_stuck():
    init = np.zeros(2)

    def value_and_grad(z):
        if np.any(z != 0.0):
            raise NumericError("outside support", z=z)
        return 0.0, np.zeros(2)

    with pytest.raises(SamplerStuckError):
        hmc_run(TargetDensity(dim=2, value_and_grad=value_and_grad), init, 3, 0, 50, RngStream(6),
                step_size=0.5, max_stuck=5)


def test_hard_wall_target_still_samples():
    # log density of a standard normal truncated to z > 0
    def value_and_grad(z):
        if z[0] <= 0:
            raise NumericError("negative", z=z)
        return float(-0.5 * z[0] ** 2), -z

    samples = hmc_run(TargetDensity(dim=1, value_and_grad=value_and_grad), np.array([1.0]), 5, 200, 500, RngStream(7))
    assert np.all(samples.draws > 0)
    assert samples.draws.mean() == pytest.approx(math.sqrt(2.0 / math.pi), abs=0.15)
