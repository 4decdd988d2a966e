from subspace.projection import (
    GradientMatrix,
    Projection,
    SubspaceModel,
    default_sigma0,
    embed,
    empirical_covariance,
    identity_model,
    lis_target_for,
    pca_projection_from_deviations,
    projection_from_gradients,
    pullback_gradient,
    sample_gradient_matrix,
    spectrum_fraction,
)
from subspace.storage import load_projection, save_projection

__all__ = [
    "GradientMatrix",
    "Projection",
    "SubspaceModel",
    "default_sigma0",
    "embed",
    "empirical_covariance",
    "identity_model",
    "lis_target_for",
    "load_projection",
    "pca_projection_from_deviations",
    "projection_from_gradients",
    "pullback_gradient",
    "sample_gradient_matrix",
    "save_projection",
    "spectrum_fraction",
]
