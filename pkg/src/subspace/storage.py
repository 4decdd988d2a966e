import struct
from pathlib import Path

import numpy as np

from core.errors import DataIOError
from schema.models import ProjectionMethod
from subspace.projection import Projection

MAGIC = b"ASPJ"
VERSION = 1
# magic, version, n, K, method code, sigma0, seed
_HEADER = struct.Struct("<4sHQQBdq")
_METHOD_CODES = {method: code for code, method in enumerate(ProjectionMethod)}
_CODE_METHODS = {code: method for method, code in _METHOD_CODES.items()}


def save_projection(projection: Projection, path: Path | str) -> None:
    """Header, then P row-major, then the spectrum, all little-endian float64."""
    header = _HEADER.pack(
        MAGIC,
        VERSION,
        projection.n,
        projection.k,
        _METHOD_CODES[projection.method],
        float(projection.sigma0),
        int(projection.seed),
    )
    with open(path, "wb") as f:
        f.write(header)
        f.write(np.ascontiguousarray(projection.matrix, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(projection.spectrum, dtype="<f8").tobytes())


def load_projection(path: Path | str) -> Projection:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as e:
        raise DataIOError(f"cannot read projection {path}: {e}") from e
    if len(blob) < _HEADER.size:
        raise DataIOError(f"{path} is too short to be a projection file")
    magic, version, n, k, code, sigma0, seed = _HEADER.unpack_from(blob)
    if magic != MAGIC or version != VERSION:
        raise DataIOError(f"{path} is not a version {VERSION} projection file")
    expected = _HEADER.size + 8 * (n * k + k)
    if len(blob) != expected:
        raise DataIOError(f"{path} has {len(blob)} bytes, expected {expected}")
    body = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size).astype(np.float64)
    return Projection(
        matrix=body[: n * k].reshape(n, k),
        spectrum=body[n * k :].copy(),
        method=_CODE_METHODS[code],
        sigma0=sigma0,
        seed=seed,
    )
