import math

import numpy as np
import pytest

from core.errors import DimensionError, InvalidInputError, NumericDomainError
from core.numerics import RngStream
from network.mlp import (
    VARIANCE_FLOOR,
    backprop_param_grad,
    batch_target_and_grad,
    forward,
    init_params,
    param_count,
    scalar_target,
)
from schema.models import Activation, GradTargetKind, OutputHead
from schema.schema import MlpConfig

AFFINE = MlpConfig(input_dim=1, hidden=())


def central_difference(f, theta: np.ndarray, h: float = 1e-5) -> np.ndarray:
    grad = np.empty_like(theta)
    for i in range(theta.shape[0]):
        step = np.zeros_like(theta)
        step[i] = h
        grad[i] = (f(theta + step) - f(theta - step)) / (2.0 * h)
    return grad


@pytest.mark.parametrize(
    "config, expected",
    [
        (MlpConfig(input_dim=1, hidden=(32, 32, 32)), 2209),
        (MlpConfig(input_dim=13, hidden=(50,), head=OutputHead.MEAN_VARIANCE), 802),
        (AFFINE, 2),
    ],
)
def test_param_count(config, expected):
    assert param_count(config) == expected


def test_init_params_shape_biases_and_determinism(small_mlp):
    theta = init_params(small_mlp, RngStream(1))
    assert theta.shape == (param_count(small_mlp),)
    # layout: W1 (8x1), b1, W2 (8x8), b2, W3 (1x8), b3
    np.testing.assert_array_equal(theta[8:16], 0.0)
    np.testing.assert_array_equal(theta[80:88], 0.0)
    assert theta[-1] == 0.0
    np.testing.assert_array_equal(theta, init_params(small_mlp, RngStream(1)))


def test_forward_zero_network(small_mlp):
    out = forward(small_mlp, np.zeros(param_count(small_mlp)), np.array([0.3]))
    assert out.mean == 0.0
    assert out.variance is None


def test_forward_affine():
    assert forward(AFFINE, np.array([2.0, 1.0]), np.array([3.0])).mean == 7.0


def test_forward_variance_head_at_zero_raw():
    config = MlpConfig(input_dim=1, hidden=(), head=OutputHead.MEAN_VARIANCE)
    out = forward(config, np.zeros(param_count(config)), np.array([1.0]))
    assert out.variance == pytest.approx(math.log(2.0) + 1e-6, abs=1e-12)


def test_variance_floor(head_mlp):
    theta = init_params(head_mlp, RngStream(2))
    theta[-1] = -800.0
    assert forward(head_mlp, theta, np.array([0.1, 0.2])).variance >= VARIANCE_FLOOR


def test_forward_dimension_mismatch(small_mlp, small_theta):
    with pytest.raises(DimensionError):
        forward(small_mlp, small_theta, np.array([0.1, 0.2]))
    with pytest.raises(DimensionError):
        forward(small_mlp, small_theta[:-1], np.array([0.1]))


def test_forward_is_pure(small_mlp, small_theta):
    a = forward(small_mlp, small_theta, np.array([0.4]))
    b = forward(small_mlp, small_theta, np.array([0.4]))
    assert a == b


def test_scalar_target_closed_forms():
    config = MlpConfig(input_dim=1, hidden=(), head=OutputHead.SCALAR)
    theta = np.array([0.0, 1.5])  # mu = 1.5 everywhere
    x = np.array([0.0])
    assert scalar_target(config, theta, x, 1.5, GradTargetKind.GAUSSIAN_NLL, variance=1.0) == pytest.approx(
        0.5 * math.log(2.0 * math.pi), abs=1e-12
    )
    assert scalar_target(config, theta, x, 1.5, GradTargetKind.MSE_LOSS) == 0.0
    assert scalar_target(config, theta, x, 3.5, GradTargetKind.STANDARDIZED_SQ_RESIDUAL, variance=4.0) == 1.0
    assert scalar_target(config, theta, x, None, GradTargetKind.OUTPUT_MEAN) == 1.5


def test_scalar_target_errors():
    config = MlpConfig(input_dim=1, hidden=())
    theta = np.array([1.0, 0.0])
    with pytest.raises(InvalidInputError):
        scalar_target(config, theta, np.array([1.0]), None, GradTargetKind.MSE_LOSS)
    with pytest.raises(NumericDomainError):
        scalar_target(config, theta, np.array([1.0]), 0.0, GradTargetKind.GAUSSIAN_NLL, variance=0.0)


def test_affine_output_mean_gradient():
    grad = backprop_param_grad(AFFINE, np.array([0.7, -0.2]), np.array([3.0]), None, GradTargetKind.OUTPUT_MEAN)
    np.testing.assert_allclose(grad, [3.0, 1.0])


def test_mse_gradient_zero_at_zero_residual(small_mlp, small_theta):
    mu = forward(small_mlp, small_theta, np.array([0.2])).mean
    grad = backprop_param_grad(small_mlp, small_theta, np.array([0.2]), mu, GradTargetKind.MSE_LOSS)
    np.testing.assert_array_equal(grad, 0.0)


CASES = [
    (MlpConfig(input_dim=1, hidden=(32, 32, 32)), GradTargetKind.OUTPUT_MEAN, None),
    (MlpConfig(input_dim=1, hidden=(32, 32, 32)), GradTargetKind.MSE_LOSS, None),
    (MlpConfig(input_dim=2, hidden=(5, 4)), GradTargetKind.GAUSSIAN_NLL, 0.7),
    (MlpConfig(input_dim=2, hidden=(5, 4)), GradTargetKind.STANDARDIZED_SQ_RESIDUAL, 0.7),
    (MlpConfig(input_dim=3, hidden=(6,), head=OutputHead.MEAN_VARIANCE), GradTargetKind.OUTPUT_MEAN, None),
    (MlpConfig(input_dim=3, hidden=(6,), head=OutputHead.MEAN_VARIANCE), GradTargetKind.MSE_LOSS, None),
    (MlpConfig(input_dim=3, hidden=(6, 6), head=OutputHead.MEAN_VARIANCE), GradTargetKind.GAUSSIAN_NLL, None),
    (MlpConfig(input_dim=3, hidden=(6, 6), head=OutputHead.MEAN_VARIANCE), GradTargetKind.STANDARDIZED_SQ_RESIDUAL, None),
    (MlpConfig(input_dim=2, hidden=(7,), activation=Activation.RELU), GradTargetKind.MSE_LOSS, None),
    (MlpConfig(input_dim=2, hidden=(7,), head=OutputHead.MEAN_VARIANCE, activation=Activation.RELU), GradTargetKind.GAUSSIAN_NLL, None),
]


@pytest.mark.parametrize("seed, case", list(enumerate(CASES)))
def test_gradient_matches_finite_differences(seed, case):
    config, target, variance = case
    generator = np.random.default_rng(100 + seed)
    theta = init_params(config, RngStream(seed)) + 0.1 * generator.standard_normal(param_count(config))
    x = generator.standard_normal(config.input_dim)
    y = float(generator.standard_normal())

    def f(t):
        return scalar_target(config, t, x, y, target, variance)

    analytic = backprop_param_grad(config, theta, x, y, target, variance)
    fd = central_difference(f, theta)
    np.testing.assert_allclose(analytic, fd, rtol=1e-5, atol=1e-7)


def test_batch_target_is_sum_over_examples(head_mlp):
    theta = init_params(head_mlp, RngStream(4))
    x = np.random.default_rng(5).standard_normal((6, 2))
    y = np.linspace(-1.0, 1.0, 6)
    value, grad = batch_target_and_grad(head_mlp, theta, x, y, GradTargetKind.GAUSSIAN_NLL)
    singles = [backprop_param_grad(head_mlp, theta, xi, yi, GradTargetKind.GAUSSIAN_NLL) for xi, yi in zip(x, y)]
    values = [scalar_target(head_mlp, theta, xi, yi, GradTargetKind.GAUSSIAN_NLL) for xi, yi in zip(x, y)]
    assert value == pytest.approx(sum(values), rel=1e-12)
    np.testing.assert_allclose(grad, np.sum(singles, axis=0), rtol=1e-10, atol=1e-12)
