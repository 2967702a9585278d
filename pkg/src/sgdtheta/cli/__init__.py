"""Experiment harness and command line tools."""

from .config import ExperimentConfig, ProblemConfig, load_config, parse_config
from .main import cmd_check, cmd_denoise_tv, cmd_phantom, cmd_project, cmd_run, main

__all__ = [
    "ExperimentConfig",
    "ProblemConfig",
    "load_config",
    "parse_config",
    "cmd_check",
    "cmd_denoise_tv",
    "cmd_phantom",
    "cmd_project",
    "cmd_run",
    "main",
]
