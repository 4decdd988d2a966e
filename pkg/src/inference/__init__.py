from inference.hmc import DualAveraging, hmc_run, leapfrog
from inference.posterior import (
    PosteriorSamples,
    TargetDensity,
    check_gradient,
    grad_subspace_log_posterior,
    make_target,
    noise_model_for,
    prior_moments,
    subspace_log_posterior,
    target_dim,
)
from inference.predictive import (
    PredictiveMixture,
    averaged_weight_diagnostic,
    bma_predictive,
    draw_posterior,
    load_posterior_csv,
    save_posterior_csv,
)
from inference.vi import VariationalParams, elbo_estimate, fit_vi, kl_diag_gaussians

__all__ = [
    "DualAveraging",
    "PosteriorSamples",
    "PredictiveMixture",
    "TargetDensity",
    "VariationalParams",
    "averaged_weight_diagnostic",
    "bma_predictive",
    "check_gradient",
    "draw_posterior",
    "elbo_estimate",
    "fit_vi",
    "grad_subspace_log_posterior",
    "hmc_run",
    "kl_diag_gaussians",
    "leapfrog",
    "load_posterior_csv",
    "make_target",
    "noise_model_for",
    "prior_moments",
    "save_posterior_csv",
    "subspace_log_posterior",
    "target_dim",
]
