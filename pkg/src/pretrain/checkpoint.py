import hashlib
import struct
from pathlib import Path

import numpy as np

from core.errors import DataIOError, DimensionError
from network.mlp import param_count
from schema.schema import MlpConfig

MAGIC = b"ASCK"
VERSION = 1
# magic, version, n, sha256 of the network config
_HEADER = struct.Struct("<4sHQ32s")


def _config_digest(config: MlpConfig) -> bytes:
    return hashlib.sha256(config.model_dump_json().encode("utf-8")).digest()


def save_checkpoint(config: MlpConfig, theta: np.ndarray, path: Path | str) -> None:
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (param_count(config),):
        raise DimensionError(f"theta has shape {theta.shape}, expected ({param_count(config)},)")
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, VERSION, theta.shape[0], _config_digest(config)))
        f.write(theta.astype("<f8").tobytes())


def load_checkpoint(config: MlpConfig, path: Path | str) -> np.ndarray:
    """Reads theta back, refusing files written for a different network."""
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as e:
        raise DataIOError(f"cannot read checkpoint {path}: {e}") from e
    if len(blob) < _HEADER.size:
        raise DataIOError(f"{path} is too short to be a checkpoint")
    magic, version, n, digest = _HEADER.unpack_from(blob)
    if magic != MAGIC or version != VERSION:
        raise DataIOError(f"{path} is not a version {VERSION} checkpoint")
    if digest != _config_digest(config):
        raise DataIOError(f"{path} was written for a different network configuration")
    if len(blob) != _HEADER.size + 8 * n:
        raise DataIOError(f"{path} is truncated")
    return np.frombuffer(blob, dtype="<f8", offset=_HEADER.size).astype(np.float64)
