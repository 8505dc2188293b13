"""Benchmark harness: configs, seeded trial batches, records and pulse files."""
from .config import ExperimentConfig, build_problem, load_config, parse_config
from .profile import RFProfile, rf_profile
from .pulsefile import export_pulse, import_pulse
from .runner import Advantage, RunRecord, TrialResult, advantage_factor, run_experiment, trial_seed

__all__ = [
    "ExperimentConfig",
    "build_problem",
    "load_config",
    "parse_config",
    "RFProfile",
    "rf_profile",
    "export_pulse",
    "import_pulse",
    "Advantage",
    "RunRecord",
    "TrialResult",
    "advantage_factor",
    "run_experiment",
    "trial_seed",
]
