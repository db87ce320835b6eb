"""Experiment harness: configs, sweeps, diagnostics, output and the CLI."""
from .config import ConfigError, ExperimentConfig, load_config, parse_text, parse_value
from .diagnostics import geometric_ergodicity_check, mode_occupancy, occupancy_error, tv_distance_to_target
from .experiments import run_sampling, run_tempering_experiment
from .sweep import FitResult, SweepResult, fit_scaling, run_sweep

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "FitResult",
    "SweepResult",
    "fit_scaling",
    "geometric_ergodicity_check",
    "load_config",
    "mode_occupancy",
    "occupancy_error",
    "parse_text",
    "parse_value",
    "run_sampling",
    "run_sweep",
    "run_tempering_experiment",
    "tv_distance_to_target",
]
