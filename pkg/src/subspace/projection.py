"""Active, likelihood-informed and iterate-PCA subspaces of the weight space."""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from core.errors import DimensionError, EmptyDatasetError, InvalidInputError
from core.numerics import DenseMatrix, RngStream, apply_sign_convention, as_dense, thin_svd
from data.datasets import Dataset
from network.mlp import backprop_param_grad, param_count
from schema.models import GradientKind, GradTargetKind, OutputHead, ProjectionMethod
from schema.schema import MlpConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GradientMatrix:
    matrix: DenseMatrix
    """(M, n); row m is the gradient at (theta_m, x_m)."""
    kind: GradientKind
    sigma0: float = 0.0
    seed: int = 0

    @property
    def n_samples(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class Projection:
    matrix: DenseMatrix | sparse.sparray
    """(n, K) with orthonormal columns; sparse only for the identity."""
    spectrum: np.ndarray
    """leading K eigenvalues of the gradient (or deviation) second-moment matrix."""
    method: ProjectionMethod
    sigma0: float = 0.0
    seed: int = 0

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def k(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class SubspaceModel:
    """theta = anchor + P z, with prior z ~ N(0, prior_std^2 I)."""

    anchor: np.ndarray
    projection: Projection
    prior_std: float = 1.0

    def __post_init__(self) -> None:
        if self.projection.n != self.anchor.shape[0]:
            raise DimensionError(
                f"projection rows {self.projection.n} do not match anchor length {self.anchor.shape[0]}"
            )
        if self.prior_std <= 0:
            raise InvalidInputError(f"prior std must be positive, got {self.prior_std}")

    @property
    def k(self) -> int:
        return self.projection.k


def lis_target_for(config: MlpConfig, lis_target: GradTargetKind = GradTargetKind.GAUSSIAN_NLL) -> GradTargetKind:
    if config.head == OutputHead.SCALAR:
        return GradTargetKind.MSE_LOSS
    return lis_target


def default_sigma0(anchor: np.ndarray) -> float:
    """a tenth of the root-mean-square anchor weight."""
    return 0.1 * float(np.sqrt(np.mean(np.square(anchor))))


def sample_gradient_matrix(
    kind: GradientKind,
    config: MlpConfig,
    anchor: np.ndarray,
    sigma0: float,
    n_samples: int,
    dataset: Dataset,
    rng: RngStream,
    lis_target: GradTargetKind = GradTargetKind.GAUSSIAN_NLL,
) -> GradientMatrix:
    """Monte Carlo gradient rows at perturbed weights and resampled data points.

    Row m draws its data index and perturbation from sub-stream m of ``rng``,
    so rows are independent of the order they are computed in.
    """
    if n_samples < 1:
        raise InvalidInputError(f"need at least one gradient sample, got {n_samples}")
    if dataset.n == 0:
        raise EmptyDatasetError("cannot sample gradients from an empty dataset")
    if sigma0 < 0:
        raise InvalidInputError(f"perturbation std must be non-negative, got {sigma0}")
    n = param_count(config)
    if anchor.shape != (n,):
        raise DimensionError(f"anchor has shape {anchor.shape}, expected ({n},)")

    target = GradTargetKind.OUTPUT_MEAN if kind == GradientKind.AS else lis_target_for(config, lis_target)
    rows = np.empty((n_samples, n))
    for m in range(n_samples):
        generator = rng.substream(m).generator()
        index = int(generator.integers(dataset.n))
        theta_m = anchor + sigma0 * generator.standard_normal(n) if sigma0 > 0 else anchor
        rows[m] = backprop_param_grad(
            config, theta_m, dataset.features[index], float(dataset.targets[index]), target
        )
    logger.debug(f"sampled {n_samples} {kind} gradients ({target}) with sigma0={sigma0:.3g}")
    return GradientMatrix(matrix=rows, kind=kind, sigma0=sigma0, seed=rng.seed)


def empirical_covariance(gradients: GradientMatrix) -> DenseMatrix:
    """(1/M) G^T G, only for small n."""
    g = gradients.matrix
    return g.T @ g / g.shape[0]


def _top_directions(rows: DenseMatrix, k: int) -> tuple[DenseMatrix, np.ndarray]:
    rows = as_dense(rows, "gradient matrix")
    m, n = rows.shape
    if not 1 <= k <= min(m, n):
        raise InvalidInputError(f"subspace dimension must lie in [1, {min(m, n)}], got {k}")
    _, s, vt = thin_svd(rows / np.sqrt(m))
    return apply_sign_convention(vt[:k].T.copy()), s[:k] ** 2


def projection_from_gradients(gradients: GradientMatrix, k: int) -> Projection:
    """Top-K eigenvectors of the uncentered gradient covariance.

    Computed from the SVD of G / sqrt(M), so the n x n covariance is never
    formed.
    """
    directions, spectrum = _top_directions(gradients.matrix, k)
    return Projection(
        matrix=directions,
        spectrum=spectrum,
        method=ProjectionMethod(gradients.kind.value),
        sigma0=gradients.sigma0,
        seed=gradients.seed,
    )


def pca_projection_from_deviations(deviations: DenseMatrix, k: int) -> Projection:
    """Top-K uncentered principal directions of SGD iterate deviations."""
    directions, spectrum = _top_directions(deviations, k)
    return Projection(matrix=directions, spectrum=spectrum, method=ProjectionMethod.PCA)


def identity_model(anchor: np.ndarray, prior_std: float = 1.0) -> SubspaceModel:
    """The full weight space as a subspace: P = I, kept sparse."""
    n = anchor.shape[0]
    projection = Projection(
        matrix=sparse.eye_array(n, format="csr"), spectrum=np.ones(n), method=ProjectionMethod.IDENTITY
    )
    return SubspaceModel(anchor=np.asarray(anchor, dtype=np.float64), projection=projection, prior_std=prior_std)


def embed(model: SubspaceModel, z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (model.k,):
        raise DimensionError(f"expected {model.k} subspace coordinates, got shape {z.shape}")
    if model.projection.method == ProjectionMethod.IDENTITY:
        return model.anchor + z
    return model.anchor + model.projection.matrix @ z


def pullback_gradient(model: SubspaceModel, grad_theta: np.ndarray) -> np.ndarray:
    """Chain rule through theta = anchor + P z: returns P^T g."""
    grad_theta = np.asarray(grad_theta, dtype=np.float64)
    if grad_theta.shape != (model.projection.n,):
        raise DimensionError(f"expected a gradient of length {model.projection.n}, got {grad_theta.shape}")
    if model.projection.method == ProjectionMethod.IDENTITY:
        return grad_theta.copy()
    return model.projection.matrix.T @ grad_theta


def spectrum_fraction(projection: Projection, total: float) -> float:
    """share of the total second moment captured by the kept directions."""
    if total <= 0:
        return 0.0
    return float(np.sum(projection.spectrum) / total)
