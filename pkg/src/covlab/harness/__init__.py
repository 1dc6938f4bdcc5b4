"""Experiment harness: configs, Monte Carlo runs, microdata files."""

from .config import SCHEMA_VERSION, ExperimentConfig, SampleSpec, dump_config, load_config
from .experiment import (
    EstimateRow,
    ExperimentResult,
    WorldBundle,
    build_world,
    run_experiment,
    run_replicate,
    summarize,
    write_replicates_csv,
    write_summary_json,
    write_summary_text,
)
from .ingest import ingest_microdata, write_microdata

__all__ = [
    "SCHEMA_VERSION",
    "ExperimentConfig",
    "SampleSpec",
    "load_config",
    "dump_config",
    "EstimateRow",
    "ExperimentResult",
    "WorldBundle",
    "build_world",
    "run_replicate",
    "run_experiment",
    "summarize",
    "write_replicates_csv",
    "write_summary_json",
    "write_summary_text",
    "ingest_microdata",
    "write_microdata",
]
