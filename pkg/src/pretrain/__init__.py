from pretrain.checkpoint import load_checkpoint, save_checkpoint
from pretrain.sgd import Trajectory, iterate_deviations, residual_log_noise, train_map

__all__ = [
    "Trajectory",
    "iterate_deviations",
    "load_checkpoint",
    "residual_log_noise",
    "save_checkpoint",
    "train_map",
]
