"""Experiment configs, the E1..E8 pipelines and the command line driver."""

from gietlab.lab.config import ExperimentConfig, load_config, resolve_system
from gietlab.lab.experiments import EXPERIMENTS, ExperimentResult, run_experiment

__all__ = [
    "EXPERIMENTS",
    "ExperimentConfig",
    "ExperimentResult",
    "load_config",
    "resolve_system",
    "run_experiment",
]
