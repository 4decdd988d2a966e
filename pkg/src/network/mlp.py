"""Multilayer perceptron over a flat parameter vector.

Parameters are stored layer-major: for each layer the weight matrix of shape
``(out, in)`` in row-major order, followed by its bias. Forward and backward
passes are vectorized over a batch of inputs; single examples are batches of
one.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from core.errors import DimensionError, InvalidInputError, NumericDomainError
from core.numerics import RngStream
from schema.models import Activation, GradTargetKind, OutputHead
from schema.schema import MlpConfig

VARIANCE_FLOOR = 1e-6
_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class NetOutput:
    mean: float
    variance: float | None = None


@dataclass
class ForwardCache:
    """activations kept for the backward pass."""

    inputs: list[np.ndarray]
    """input to each layer, ``inputs[0]`` is the batch itself."""
    pre_activations: list[np.ndarray]
    raw: np.ndarray
    """raw network outputs, shape (batch, output_dim)."""

    @property
    def mean(self) -> np.ndarray:
        return self.raw[:, 0]


def param_count(config: MlpConfig) -> int:
    sizes = config.layer_sizes
    return sum(n_in * n_out + n_out for n_in, n_out in zip(sizes[:-1], sizes[1:]))


def unpack(config: MlpConfig, theta: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    """views of (W, b) per layer into ``theta``."""
    theta = np.asarray(theta, dtype=np.float64)
    expected = param_count(config)
    if theta.shape != (expected,):
        raise DimensionError(f"expected {expected} parameters, got shape {theta.shape}")
    layers = []
    offset = 0
    sizes = config.layer_sizes
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        w = theta[offset : offset + n_in * n_out].reshape(n_out, n_in)
        offset += n_in * n_out
        b = theta[offset : offset + n_out]
        offset += n_out
        layers.append((w, b))
    return layers


def init_params(config: MlpConfig, rng: RngStream) -> np.ndarray:
    """weights ~ N(0, 1/fan_in), biases zero."""
    generator = rng.generator()
    chunks = []
    sizes = config.layer_sizes
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        chunks.append(generator.standard_normal(n_in * n_out) / np.sqrt(n_in))
        chunks.append(np.zeros(n_out))
    return np.concatenate(chunks)


def _activate(kind: Activation, a: np.ndarray) -> np.ndarray:
    if kind == Activation.TANH:
        return np.tanh(a)
    return np.maximum(a, 0.0)


def _activation_grad(kind: Activation, a: np.ndarray, h: np.ndarray) -> np.ndarray:
    if kind == Activation.TANH:
        return 1.0 - h * h
    return (a > 0.0).astype(np.float64)


def _as_batch(config: MlpConfig, x: np.ndarray) -> np.ndarray:
    batch = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if batch.shape[1] != config.input_dim:
        raise DimensionError(f"expected {config.input_dim} input features, got {batch.shape[1]}")
    return batch


def forward_batch(config: MlpConfig, theta: np.ndarray, x: np.ndarray) -> ForwardCache:
    layers = unpack(config, theta)
    h = _as_batch(config, x)
    inputs, pre = [], []
    for index, (w, b) in enumerate(layers):
        inputs.append(h)
        a = h @ w.T + b
        if index == len(layers) - 1:
            return ForwardCache(inputs=inputs, pre_activations=pre, raw=a)
        pre.append(a)
        h = _activate(config.activation, a)
    raise AssertionError("unreachable")


def head_variance(raw: np.ndarray) -> np.ndarray:
    """softplus of the second raw output plus a floor."""
    return np.logaddexp(0.0, raw[:, 1]) + VARIANCE_FLOOR


def backward(config: MlpConfig, theta: np.ndarray, cache: ForwardCache, d_raw: np.ndarray) -> np.ndarray:
    """Gradient w.r.t. theta of ``sum(d_raw * raw)`` over the batch."""
    layers = unpack(config, theta)
    grads: list[np.ndarray] = []
    delta = np.asarray(d_raw, dtype=np.float64).reshape(cache.raw.shape)
    for index in range(len(layers) - 1, -1, -1):
        w, _ = layers[index]
        h_in = cache.inputs[index]
        grads.append(delta.sum(axis=0))
        grads.append((delta.T @ h_in).ravel())
        if index > 0:
            delta = (delta @ w) * _activation_grad(
                config.activation, cache.pre_activations[index - 1], h_in
            )
    return np.concatenate(grads[::-1])


def forward(config: MlpConfig, theta: np.ndarray, x: np.ndarray) -> NetOutput:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionError(f"forward takes a single feature vector, got shape {x.shape}")
    raw = forward_batch(config, theta, x[None, :]).raw
    if config.head == OutputHead.MEAN_VARIANCE:
        return NetOutput(mean=float(raw[0, 0]), variance=float(head_variance(raw)[0]))
    return NetOutput(mean=float(raw[0, 0]))


def _target_terms(
    config: MlpConfig,
    cache: ForwardCache,
    y: np.ndarray | None,
    target: GradTargetKind,
    variance: float | None,
) -> tuple[np.ndarray, np.ndarray]:
    """per-example target values and d(target)/d(raw)."""
    raw = cache.raw
    mu = raw[:, 0]
    d_raw = np.zeros_like(raw)
    if target == GradTargetKind.OUTPUT_MEAN:
        d_raw[:, 0] = 1.0
        return mu.copy(), d_raw
    if y is None:
        raise InvalidInputError(f"target {target} requires a label")
    y = np.broadcast_to(np.asarray(y, dtype=np.float64), mu.shape)
    r = y - mu
    if target == GradTargetKind.MSE_LOSS:
        d_raw[:, 0] = -2.0 * r
        return r * r, d_raw

    from_head = config.head == OutputHead.MEAN_VARIANCE
    if from_head:
        v = head_variance(raw)
    elif variance is None:
        raise InvalidInputError(f"target {target} on a scalar head needs an explicit variance")
    else:
        v = np.full_like(mu, float(variance))
    if np.any(v <= 0):
        raise NumericDomainError(f"variance must be positive, got min {float(np.min(v))}")

    if target == GradTargetKind.GAUSSIAN_NLL:
        values = 0.5 * (_LOG_2PI + np.log(v)) + r * r / (2.0 * v)
        d_mu = -r / v
        d_v = 0.5 / v - r * r / (2.0 * v * v)
    else:
        values = r * r / v
        d_mu = -2.0 * r / v
        d_v = -r * r / (v * v)
    d_raw[:, 0] = d_mu
    if from_head:
        d_raw[:, 1] = d_v * expit(raw[:, 1])
    return values, d_raw


def scalar_target(
    config: MlpConfig,
    theta: np.ndarray,
    x: np.ndarray,
    y: float | None,
    target: GradTargetKind,
    variance: float | None = None,
) -> float:
    """Value of the scalar target at one example.

    ``variance`` supplies v for likelihood targets on a scalar head.
    """
    cache = forward_batch(config, theta, np.asarray(x, dtype=np.float64)[None, :])
    values, _ = _target_terms(config, cache, None if y is None else np.array([y]), target, variance)
    return float(values[0])


def backprop_param_grad(
    config: MlpConfig,
    theta: np.ndarray,
    x: np.ndarray,
    y: float | None,
    target: GradTargetKind,
    variance: float | None = None,
) -> np.ndarray:
    """Exact gradient of :func:`scalar_target` with respect to theta."""
    cache = forward_batch(config, theta, np.asarray(x, dtype=np.float64)[None, :])
    _, d_raw = _target_terms(config, cache, None if y is None else np.array([y]), target, variance)
    return backward(config, theta, cache, d_raw)


def batch_target_and_grad(
    config: MlpConfig,
    theta: np.ndarray,
    x: np.ndarray,
    y: np.ndarray | None,
    target: GradTargetKind,
    variance: float | None = None,
) -> tuple[float, np.ndarray]:
    """Summed target over a batch and its gradient, used by the trainer."""
    cache = forward_batch(config, theta, x)
    values, d_raw = _target_terms(config, cache, y, target, variance)
    return float(values.sum()), backward(config, theta, cache, d_raw)
