"""Configuration, orchestration and output for the command line tool."""

from .config import ConfigValidationError, ExperimentConfig, dump_config, load_config, parse_config, write_config
from .plotting import emit_plot_script
from .runner import Manifest, RunResult, run_experiment

__all__ = [
    "ConfigValidationError",
    "ExperimentConfig",
    "Manifest",
    "RunResult",
    "dump_config",
    "emit_plot_script",
    "load_config",
    "parse_config",
    "run_experiment",
    "write_config",
]
