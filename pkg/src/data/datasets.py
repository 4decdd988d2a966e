"""Benchmark data: the sine simulation, csv ingestion, splits and scaling."""

import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import pandas as pd

from core.errors import (
    CsvParseError,
    DataIOError,
    EmptyDatasetError,
    InvalidInputError,
    ScalerError,
)
from core.numerics import RngStream

logger = logging.getLogger(__name__)

# columns whose std falls below this (relative to their magnitude) count as constant
_CONSTANT_RTOL = 1e-12


@dataclass(frozen=True)
class Scaler:
    """Per-column affine standardization fitted on a training split."""

    x_mean: np.ndarray
    x_std: np.ndarray
    y_mean: float
    y_std: float

    @classmethod
    def identity(cls, n_features: int) -> "Scaler":
        return cls(np.zeros(n_features), np.ones(n_features), 0.0, 1.0)

    def transform_x(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.x_mean) / self.x_std

    def transform_y(self, y: np.ndarray) -> np.ndarray:
        return (np.asarray(y, dtype=np.float64) - self.y_mean) / self.y_std

    def inverse_x(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=np.float64) * self.x_std + self.x_mean

    def inverse_y(self, y: np.ndarray) -> np.ndarray:
        return np.asarray(y, dtype=np.float64) * self.y_std + self.y_mean

    def inverse_variance(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v, dtype=np.float64) * self.y_std**2


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    """(N, p) matrix."""
    targets: np.ndarray
    name: str = "dataset"
    feature_names: tuple[str, ...] = ()
    scaler: Scaler | None = None

    def __post_init__(self) -> None:
        if self.features.ndim != 2 or self.targets.shape != (self.features.shape[0],):
            raise InvalidInputError(
                f"features {self.features.shape} and targets {self.targets.shape} do not align"
            )
        if not (np.isfinite(self.features).all() and np.isfinite(self.targets).all()):
            raise InvalidInputError(f"dataset {self.name} contains non-finite values")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    def subset(self, indices: np.ndarray) -> "Dataset":
        return replace(self, features=self.features[indices], targets=self.targets[indices])


def sine_curve(x: np.ndarray) -> np.ndarray:
    return np.sin(4.0 * np.pi * x) + np.sin(7.0 * np.pi * x)


def gen_sine(n: int, noise_std: float, rng: RngStream, name: str = "sine") -> Dataset:
    """x ~ U[0, 1], y = sin(4 pi x) + sin(7 pi x) + N(0, noise_std^2)."""
    if n < 1:
        raise InvalidInputError(f"need at least one point, got {n}")
    if noise_std < 0:
        raise InvalidInputError(f"noise std must be non-negative, got {noise_std}")
    generator = rng.generator()
    x = generator.uniform(0.0, 1.0, size=n)
    y = sine_curve(x) + noise_std * generator.standard_normal(n)
    return Dataset(features=x[:, None], targets=y, name=name, feature_names=("x",))


def _check_not_constant(values: np.ndarray, names: tuple[str, ...]) -> None:
    std = values.std(axis=0)
    scale = np.abs(values).max(axis=0) if values.size else np.zeros(values.shape[1])
    for j, name in enumerate(names):
        if std[j] <= _CONSTANT_RTOL * max(float(scale[j]), 1.0):
            raise ScalerError(name)


def load_csv(path: Path | str, target: str, name: str | None = None) -> Dataset:
    """Reads a headed, comma-separated numeric file; the rest of the columns are features."""
    path = Path(path)
    if not path.is_file():
        raise DataIOError(f"data file {path} does not exist")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError as e:
        raise EmptyDatasetError(f"{path} has no header") from e
    except UnicodeDecodeError as e:
        raise DataIOError(f"{path} is not utf-8 text: {e}") from e
    except pd.errors.ParserError as e:
        raise DataIOError(f"{path} is not a well-formed csv file: {e}") from e
    if target not in frame.columns:
        raise InvalidInputError(f"target column {target!r} not in {list(frame.columns)}")
    if frame.empty:
        raise EmptyDatasetError(f"{path} has a header but no rows")

    numeric = frame.apply(lambda column: pd.to_numeric(column.str.strip(), errors="coerce"))
    bad = ~np.isfinite(numeric.to_numpy(dtype=np.float64))
    if bad.any():
        row, col = map(int, np.argwhere(bad)[0])
        # header is line 1, so data row i sits on line i + 2
        raise CsvParseError(row + 2, str(frame.columns[col]), frame.iat[row, col])

    feature_names = tuple(str(c) for c in frame.columns if c != target)
    features = numeric[list(feature_names)].to_numpy(dtype=np.float64)
    targets = numeric[target].to_numpy(dtype=np.float64)
    _check_not_constant(features, feature_names)
    logger.info(f"loaded {path}: N={features.shape[0]}, p={features.shape[1]}")
    return Dataset(
        features=features,
        targets=targets,
        name=name or path.stem,
        feature_names=feature_names,
    )


def split(dataset: Dataset, test_fraction: float, rng: RngStream) -> tuple[Dataset, Dataset]:
    """Random permutation split with floor(N * fraction + 1/2) test points (at least one)."""
    if not 0.0 < test_fraction < 1.0:
        raise InvalidInputError(f"test fraction must lie in (0, 1), got {test_fraction}")
    if dataset.n < 2:
        raise InvalidInputError(f"cannot split a dataset of {dataset.n} rows")
    n_test = min(max(1, math.floor(dataset.n * test_fraction + 0.5)), dataset.n - 1)
    order = rng.generator().permutation(dataset.n)
    return dataset.subset(order[n_test:]), dataset.subset(order[:n_test])


def standardize(train: Dataset, test: Dataset) -> tuple[Dataset, Dataset, Scaler]:
    """Fits a scaler on ``train`` only and applies it to both splits."""
    if train.n == 0:
        raise EmptyDatasetError("cannot standardize an empty training set")
    names = train.feature_names or tuple(f"x{j}" for j in range(train.p))
    _check_not_constant(train.features, names)
    _check_not_constant(train.targets[:, None], ("target",))
    scaler = Scaler(
        x_mean=train.features.mean(axis=0),
        x_std=train.features.std(axis=0),
        y_mean=float(train.targets.mean()),
        y_std=float(train.targets.std()),
    )

    def apply(ds: Dataset) -> Dataset:
        return replace(
            ds,
            features=scaler.transform_x(ds.features),
            targets=scaler.transform_y(ds.targets),
            scaler=scaler,
        )

    return apply(train), apply(test), scaler
