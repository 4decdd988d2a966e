from metrics.evaluation import (
    avg_log_likelihood,
    coverage95,
    evaluate,
    interval95,
    mixture_cdf,
    mixture_quantile,
    rmse,
)

__all__ = [
    "avg_log_likelihood",
    "coverage95",
    "evaluate",
    "interval95",
    "mixture_cdf",
    "mixture_quantile",
    "rmse",
]
