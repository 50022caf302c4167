"""Config parsing, run orchestration, and benchmark commands."""

from .bench import KernelTiming, bench_kernels, bench_schedule
from .config import PRESETS, SCHEMA, RunConfig, parse_config, resolve_config
from .main import main
from .runner import (
    CHECKPOINT_FILENAME,
    CSV_HEADER,
    METADATA_FILENAME,
    METRICS_FILENAME,
    CsvMetricsWriter,
    build_algorithm,
    build_datasets,
    build_engine,
    build_model,
    build_privacy_pipeline,
    execute_run,
)

__all__ = [
    "KernelTiming",
    "bench_kernels",
    "bench_schedule",
    "PRESETS",
    "SCHEMA",
    "RunConfig",
    "parse_config",
    "resolve_config",
    "main",
    "CHECKPOINT_FILENAME",
    "CSV_HEADER",
    "METADATA_FILENAME",
    "METRICS_FILENAME",
    "CsvMetricsWriter",
    "build_algorithm",
    "build_datasets",
    "build_engine",
    "build_model",
    "build_privacy_pipeline",
    "execute_run",
]
