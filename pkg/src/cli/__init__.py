from cli.config import SCENARIOS, load_config, output_dir, parse_config
from cli.pipeline import run_experiment

__all__ = ["SCENARIOS", "load_config", "output_dir", "parse_config", "run_experiment"]
