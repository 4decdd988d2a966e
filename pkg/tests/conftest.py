from pathlib import Path

import numpy as np
import pytest

from cli.config import parse_config
from cli.pipeline import run_experiment
from core.numerics import RngStream
from data.datasets import gen_sine
from network.mlp import init_params
from schema.models import Activation, OutputHead
from schema.schema import ExperimentConfig, MlpConfig


@pytest.fixture
def rng() -> RngStream:
    return RngStream(seed=7)


@pytest.fixture
def small_mlp() -> MlpConfig:
    return MlpConfig(input_dim=1, hidden=(8, 8), head=OutputHead.SCALAR, activation=Activation.TANH)


@pytest.fixture
def head_mlp() -> MlpConfig:
    return MlpConfig(input_dim=2, hidden=(6,), head=OutputHead.MEAN_VARIANCE, activation=Activation.TANH)


@pytest.fixture
def small_theta(small_mlp: MlpConfig) -> np.ndarray:
    return init_params(small_mlp, RngStream(3))


@pytest.fixture
def sine_data():
    return gen_sine(40, 0.1, RngStream(11))


@pytest.fixture
def boston_like_csv(tmp_path: Path) -> Path:
    """A small regression file with a header, three features and a target."""
    generator = np.random.default_rng(0)
    x = generator.normal(size=(60, 3))
    y = x @ np.array([1.0, -2.0, 0.5]) + 0.3 * generator.normal(size=60)
    lines = ["a,b,c,price"] + [f"{float(r[0])!r},{float(r[1])!r},{float(r[2])!r},{float(t)!r}" for r, t in zip(x, y)]
    path = tmp_path / "houses.csv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def tiny_experiment(tmp_path: Path, method: str = "AS", kind: str = "hmc", trials: int = 1, **sections) -> ExperimentConfig:
    """A fast end-to-end configuration on a small sine problem."""
    raw = {
        "experiment": {"name": f"tiny-{method.lower()}", "method": method, "trials": trials, "seed": 5,
                       "output_dir": str(tmp_path / f"run-{method.lower()}-{kind}")},
        "data": {"kind": "sine", "n": 30, "noise_std": 0.2, "n_test": 25},
        "network": {"hidden": [6]},
        "pretrain": {"epochs": 40, "batch_size": 10, "learning_rate": 0.05},
        "subspace": {"dim": 3, "n_gradients": 10},
        "inference": {
            "kind": kind,
            "n_bma": 5,
            "hmc": {"n_leapfrog": 5, "warmup": 60, "n_samples": 40},
            "vi": {"steps": 60, "n_mc_eval": 8},
        },
    }
    for section, values in sections.items():
        raw.setdefault(section, {}).update(values)
    return parse_config(raw)


@pytest.fixture
def tiny_config():
    return tiny_experiment


@pytest.fixture(scope="session")
def sine_run(tmp_path_factory) -> Path:
    """A completed AS/HMC run named sine-as inside its own runs directory."""
    runs = tmp_path_factory.mktemp("runs")
    run_dir = runs / "sine-as"
    config = tiny_experiment(runs, experiment={"name": "sine-as", "output_dir": str(run_dir)})
    run_experiment(config, run_dir)
    return run_dir
