import logging
from pathlib import Path

import numpy as np
import pandas as pd

from cli.artifacts import FittedTrial, trial_dir
from core.errors import InvalidInputError

logger = logging.getLogger(__name__)

BANDS_FILE = "bands.csv"
CURVES_FILE = "curves.csv"


def parse_grid(text: str) -> np.ndarray:
    """'a:b:step' -> a, a + step, ..., b (inclusive when b is on the grid)."""
    try:
        start, stop, step = (float(part) for part in text.split(":"))
    except ValueError as e:
        raise InvalidInputError(f"grid must look like 'a:b:step', got {text!r}") from e
    if step <= 0 or stop < start:
        raise InvalidInputError(f"grid {text!r} needs step > 0 and b >= a")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(count)


def write_plotdata(run_dir: Path | str, grid: np.ndarray, trial: int = 0) -> tuple[Path, Path]:
    """Writes bands.csv (mean +- 2 std and the functional std) and curves.csv (one mean per draw).

    Only for runs with a single input feature.
    """
    run_dir = Path(run_dir)
    fitted = FittedTrial.load(run_dir, trial)
    if fitted.mlp.input_dim != 1:
        raise InvalidInputError(f"plot data needs a single input feature, the run has {fitted.mlp.input_dim}")
    mixture = fitted.predict(grid[:, None])
    mean, std = mixture.mean, mixture.std
    bands = pd.DataFrame(
        {
            "x": grid,
            "mean": mean,
            "lower": mean - 2.0 * std,
            "upper": mean + 2.0 * std,
            "epistemic_std": mixture.epistemic_std,
        }
    )
    curves = pd.DataFrame(mixture.means, columns=[f"sample_{j + 1}" for j in range(mixture.n_components)])
    curves.insert(0, "x", grid)

    directory = trial_dir(run_dir, trial)
    bands_path, curves_path = directory / BANDS_FILE, directory / CURVES_FILE
    bands.to_csv(bands_path, index=False, float_format="%.17g")
    curves.to_csv(curves_path, index=False, float_format="%.17g")
    logger.info(f"wrote {len(grid)} grid rows to {bands_path} and {curves_path}")
    return bands_path, curves_path
