"""Configuration, ensemble diagnostics, standard experiments and the CLI."""

from .config import ExperimentConfig, ValidationReport, initial_field, validate
from .diagnostics import (
    EnsembleSummary,
    aldous_statistic,
    gn_ratio_scan,
    jackknife,
    moment_sup_EA,
    sub_seed,
)
from .experiments import EXPERIMENTS, THRESHOLDS, ExperimentResult, run_experiment

__all__ = [
    "EXPERIMENTS",
    "THRESHOLDS",
    "EnsembleSummary",
    "ExperimentConfig",
    "ExperimentResult",
    "ValidationReport",
    "aldous_statistic",
    "gn_ratio_scan",
    "initial_field",
    "jackknife",
    "moment_sup_EA",
    "run_experiment",
    "sub_seed",
    "validate",
]
