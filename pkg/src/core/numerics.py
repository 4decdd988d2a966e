"""Dense linear algebra and seeded random streams.

Everything here is a pure function of its inputs. Matrices are float64 numpy
arrays; ``DenseMatrix`` is only an alias used in signatures.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import TypeAlias

import numpy as np

from core.errors import DimensionError, InvalidInputError

logger = logging.getLogger(__name__)

DenseMatrix: TypeAlias = np.ndarray

SYMMETRY_RTOL = 1e-10
_MAX_SWEEPS = 100
_EPS = float(np.finfo(np.float64).eps)
# singular values below this fraction of the largest get completed left vectors
_NULL_RTOL = 1e-12


@dataclass(frozen=True)
class RngStream:
    """A reproducible random stream identified by (seed, stream).

    Sub-streams are addressed by appending indices to ``path``; each distinct
    (seed, stream, path) maps to an independent ``numpy`` SeedSequence.
    """

    seed: int
    stream: int = 0
    path: tuple[int, ...] = field(default=())

    def generator(self) -> np.random.Generator:
        sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream, *self.path))
        return np.random.Generator(np.random.PCG64(sequence))

    def substream(self, index: int) -> "RngStream":
        return RngStream(self.seed, self.stream, (*self.path, index))


@dataclass(frozen=True)
class EigDecomposition:
    eigenvalues: np.ndarray
    """eigenvalues in non-increasing order."""
    eigenvectors: DenseMatrix
    """orthonormal eigenvectors stored as columns."""


def as_dense(a: np.ndarray | list, name: str = "matrix") -> DenseMatrix:
    """validates a 2-d finite float64 matrix."""
    matrix = np.asarray(a, dtype=np.float64)
    if matrix.ndim != 2:
        raise DimensionError(f"{name} must be 2-d, got shape {matrix.shape}")
    if np.isnan(matrix).any():
        raise InvalidInputError(f"{name} contains NaN entries")
    if not np.isfinite(matrix).all():
        raise InvalidInputError(f"{name} contains infinite entries")
    return matrix


def apply_sign_convention(vectors: DenseMatrix) -> DenseMatrix:
    """flips each column so its largest-magnitude entry is positive."""
    if vectors.size == 0:
        return vectors
    rows = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[rows, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def _rotate(matrix: DenseMatrix, p: int, q: int, c: float, s: float, rows: bool) -> None:
    if rows:
        mp = matrix[p, :].copy()
        mq = matrix[q, :]
        matrix[p, :] = c * mp - s * mq
        matrix[q, :] = s * mp + c * matrix[q, :]
    else:
        mp = matrix[:, p].copy()
        mq = matrix[:, q]
        matrix[:, p] = c * mp - s * mq
        matrix[:, q] = s * mp + c * matrix[:, q]


def sym_eig_desc(s: DenseMatrix) -> EigDecomposition:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    The first sweeps skip rotations below a threshold proportional to the
    remaining off-diagonal mass; later sweeps drop entries that no longer
    change the diagonal. Eigenvalues come back in non-increasing order with
    the sign convention of :func:`apply_sign_convention` on the columns.
    """
    a = as_dense(s).copy()
    n, m = a.shape
    if n != m:
        raise DimensionError(f"expected a square matrix, got {n}x{m}")
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    if scale > 0 and np.max(np.abs(a - a.T)) > SYMMETRY_RTOL * scale:
        raise DimensionError("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    v = np.eye(n)
    frobenius = float(np.linalg.norm(a))
    # off-diagonal mass below roundoff of the whole matrix counts as diagonal
    tolerance = n * _EPS * frobenius
    previous = math.inf

    for sweep in range(_MAX_SWEEPS):
        off = float(np.sqrt(max(np.sum(a * a) - np.sum(np.diag(a) ** 2), 0.0)))
        if off <= tolerance or off == 0.0:
            break
        if sweep > 3 and off >= previous and off <= math.sqrt(_EPS) * frobenius:
            logger.debug(f"jacobi stalled at off={off:.3g} after {sweep} sweeps (n={n})")
            break
        previous = off
        threshold = 0.2 * off / (n * n) if sweep < 3 else 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                g = 100.0 * abs(apq)
                app, aqq = a[p, p], a[q, q]
                if sweep > 3 and abs(app) + g == abs(app) and abs(aqq) + g == abs(aqq):
                    a[p, q] = a[q, p] = 0.0
                    continue
                if abs(apq) <= threshold or apq == 0.0:
                    continue
                theta = (aqq - app) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 1.0 / (2.0 * theta)
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                sn = t * c
                _rotate(a, p, q, c, sn, rows=False)
                _rotate(a, p, q, c, sn, rows=True)
                _rotate(v, p, q, c, sn, rows=False)
                a[p, q] = a[q, p] = 0.0
    else:
        logger.warning(f"jacobi did not converge in {_MAX_SWEEPS} sweeps (n={n})")

    eigenvalues = np.diag(a).copy()
    order = np.argsort(-eigenvalues, kind="stable")
    return EigDecomposition(
        eigenvalues=eigenvalues[order],
        eigenvectors=apply_sign_convention(v[:, order]),
    )


def _complete_columns(basis: DenseMatrix, total: int) -> DenseMatrix:
    """extends orthonormal columns to ``total`` orthonormal columns."""
    rows, have = basis.shape
    if have >= total:
        return basis
    filler = np.random.default_rng(0).standard_normal((rows, total - have))
    q, _ = np.linalg.qr(np.hstack([basis, filler]))
    return np.hstack([basis, q[:, have:total]])


def _tall_svd(a: DenseMatrix) -> tuple[DenseMatrix, np.ndarray, DenseMatrix]:
    # rows >= cols: eigenvectors of the cols x cols Gram matrix give V
    _, k = a.shape
    v = sym_eig_desc(a.T @ a).eigenvectors
    av = a @ v
    s = np.linalg.norm(av, axis=0)
    order = np.argsort(-s, kind="stable")
    s, v, av = s[order], v[:, order], av[:, order]
    positive = s > _NULL_RTOL * s[0] if k and s[0] > 0 else np.zeros(k, dtype=bool)
    u = av[:, positive] / s[positive]
    u = _complete_columns(u, k)
    # dividing by small s amplifies Gram roundoff; restore orthonormality
    q, r = np.linalg.qr(u)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs, s, v.T


def thin_svd(a: DenseMatrix) -> tuple[DenseMatrix, np.ndarray, DenseMatrix]:
    """Thin SVD through the eigendecomposition of the smaller Gram matrix.

    Returns ``(U, s, Vt)`` with ``a = U @ diag(s) @ Vt`` and ``s`` descending.
    Singular values are the column norms of ``a @ v`` rather than square roots
    of Gram eigenvalues, which keeps the reconstruction exact for small values.
    """
    a = as_dense(a)
    m, n = a.shape
    if m < 1 or n < 1:
        raise DimensionError(f"thin_svd needs a non-empty matrix, got {m}x{n}")
    if m >= n:
        return _tall_svd(a)
    u, s, vt = _tall_svd(a.T)
    return vt.T, s, u.T


def gaussian_vector(n: int, mean: float, std: float, rng: RngStream) -> np.ndarray:
    """n i.i.d. normal draws from a fresh generator of ``rng``."""
    if std < 0:
        raise InvalidInputError(f"std must be non-negative, got {std}")
    if std == 0:
        return np.full(n, float(mean))
    return mean + std * rng.generator().standard_normal(n)
