from .config import ConfigError, ExperimentConfig, load_config
from .report import canonical_json, emit_predictions, emit_report
from .runner import BenchReport, derive_seed, run_benchmark

__all__ = [
    "BenchReport", "ConfigError", "ExperimentConfig",
    "canonical_json", "derive_seed", "emit_predictions", "emit_report",
    "load_config", "run_benchmark",
]
