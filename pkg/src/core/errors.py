"""Exception hierarchy shared by every package."""

import numpy as np


class SubspaceInferenceError(Exception):
    """base error for the subspace inference pipeline."""


class DimensionError(SubspaceInferenceError):
    """shapes or lengths do not agree."""


class InvalidInputError(SubspaceInferenceError):
    """an operation precondition is violated."""


class EmptyDatasetError(InvalidInputError):
    """a dataset with no rows was supplied where data is required."""


class NumericDomainError(SubspaceInferenceError):
    """a quantity is outside its mathematical domain (e.g. a non-positive variance)."""


class NumericError(SubspaceInferenceError):
    """a computation produced non-finite values or failed to converge."""

    def __init__(self, message: str, z: np.ndarray | None = None) -> None:
        super().__init__(message)
        self.z = None if z is None else np.array(z, copy=True)


class TrainingDivergedError(SubspaceInferenceError):
    """an optimizer produced a NaN loss or gradient."""

    def __init__(self, message: str, last_finite: np.ndarray | None = None) -> None:
        super().__init__(message)
        self.last_finite = last_finite


class SamplerStuckError(SubspaceInferenceError):
    """hmc rejected every proposal for too long."""


class DataIOError(SubspaceInferenceError, OSError):
    """a required file or run artifact is missing or unreadable."""


class CsvParseError(SubspaceInferenceError):
    """a csv cell could not be parsed as a decimal number."""

    def __init__(self, row: int, column: str, value: str) -> None:
        super().__init__(f"cannot parse {value!r} at row {row}, column {column!r}")
        self.row = row
        self.column = column


class ScalerError(SubspaceInferenceError):
    """a column cannot be standardized."""

    def __init__(self, column: str) -> None:
        super().__init__(f"column {column!r} is constant and cannot be standardized")
        self.column = column


class StageError(SubspaceInferenceError):
    """wraps a failure with the pipeline stage and trial that raised it."""

    def __init__(self, stage: str, trial: int, cause: Exception) -> None:
        super().__init__(f"stage={stage} trial={trial}: {cause}")
        self.stage = stage
        self.trial = trial
        self.cause = cause
