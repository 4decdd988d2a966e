from network.mlp import (
    ForwardCache,
    NetOutput,
    backprop_param_grad,
    backward,
    batch_target_and_grad,
    forward,
    forward_batch,
    head_variance,
    init_params,
    param_count,
    scalar_target,
)

__all__ = [
    "ForwardCache",
    "NetOutput",
    "backprop_param_grad",
    "backward",
    "batch_target_and_grad",
    "forward",
    "forward_batch",
    "head_variance",
    "init_params",
    "param_count",
    "scalar_target",
]
