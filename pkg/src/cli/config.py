"""Experiment configuration files."""

import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, NamedTuple

from core.errors import DataIOError, InvalidInputError
from core.settings import settings
from schema.schema import ExperimentConfig

logger = logging.getLogger(__name__)


class Scenario(NamedTuple):
    noise_std: float
    n: int
    hidden: tuple[int, ...]


# simulation scenarios, selected with `[data] scenario = k`
SCENARIOS: dict[int, Scenario] = {
    1: Scenario(0.4, 100, (32, 32, 32)),
    2: Scenario(0.8, 100, (32, 32, 32)),
    3: Scenario(0.4, 50, (32, 32, 32)),
    4: Scenario(0.4, 100, (64,) * 6),
    5: Scenario(0.4, 100, (128, 128, 128)),
}


def _apply_scenario(raw: dict[str, Any]) -> None:
    data = raw.setdefault("data", {})
    if "scenario" not in data:
        return
    key = data.pop("scenario")
    if key not in SCENARIOS:
        raise InvalidInputError(f"unknown scenario {key!r}, expected one of {sorted(SCENARIOS)}")
    scenario = SCENARIOS[key]
    data.setdefault("n", scenario.n)
    data.setdefault("noise_std", scenario.noise_std)
    raw.setdefault("network", {}).setdefault("hidden", list(scenario.hidden))


def _resolve_paths(raw: dict[str, Any], base: Path) -> None:
    data = raw.get("data", {})
    if "path" in data and not Path(data["path"]).is_absolute():
        data["path"] = str(base / data["path"])
    experiment = raw.get("experiment", {})
    if "output_dir" in experiment and not Path(experiment["output_dir"]).is_absolute():
        experiment["output_dir"] = str(base / experiment["output_dir"])


def parse_config(raw: dict[str, Any], base: Path | None = None) -> ExperimentConfig:
    """Validates a raw mapping; relative paths are taken relative to ``base``."""
    _apply_scenario(raw)
    if base is not None:
        _resolve_paths(raw, base)
    return ExperimentConfig.model_validate(raw)


def load_config(path: Path | str) -> ExperimentConfig:
    """Reads a TOML experiment file; pydantic ValidationError propagates for bad keys or values."""
    path = Path(path)
    try:
        with open(path, "rb") as f:
            raw = tomllib.load(f)
    except OSError as e:
        raise DataIOError(f"cannot read config {path}: {e}") from e
    except tomllib.TOMLDecodeError as e:
        raise InvalidInputError(f"{path} is not valid TOML: {e}") from e
    config = parse_config(raw, base=path.parent)
    logger.debug(f"loaded {path}: method {config.method}, {config.experiment.trials} trial(s)")
    return config


def output_dir(config: ExperimentConfig, override: Path | str | None = None) -> Path:
    """--out wins over the config file, which wins over RUNS_DIR/<name>."""
    if override is not None:
        return Path(override)
    if config.experiment.output_dir is not None:
        return config.experiment.output_dir
    return settings.RUNS_DIR / config.experiment.name
