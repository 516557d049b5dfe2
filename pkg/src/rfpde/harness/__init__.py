"""Experiment layer: configs, presets, runners, figures and the CLI."""
from .config import ExperimentConfig, load_config, load_preset, preset_names, resolve_config
from .runs import RunReport, run_derivative_bench, run_optimize, run_solve, run_sweep

__all__ = [
    "ExperimentConfig", "RunReport", "load_config", "load_preset", "preset_names", "resolve_config",
    "run_derivative_bench", "run_optimize", "run_solve", "run_sweep",
]
