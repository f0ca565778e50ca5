"""Training pipeline: config, checkpointing, train/eval loops, tooling."""

from .bench import BenchRow, bench, format_table
from .checkpoint import CheckpointError, load_arrays, save_arrays
from .config import (
    ConfigError,
    OptimizerConfig,
    RunConfig,
    config_from_dict,
    config_from_text,
    config_to_text,
    dataclass_from_dict,
    load_config,
)
from .data import DatasetError, SnippetStore, load_manifest, prepare_dataset
from .dumps import fuse_dump
from .gradcheck import CheckResult, format_report, run_gradcheck
from .train import (
    MetricsReport,
    TrainAbort,
    TrainResult,
    evaluate,
    evaluate_state,
    train,
)

__all__ = [
    "BenchRow",
    "bench",
    "format_table",
    "CheckpointError",
    "load_arrays",
    "save_arrays",
    "ConfigError",
    "OptimizerConfig",
    "RunConfig",
    "config_from_dict",
    "config_from_text",
    "config_to_text",
    "dataclass_from_dict",
    "load_config",
    "DatasetError",
    "SnippetStore",
    "load_manifest",
    "prepare_dataset",
    "fuse_dump",
    "CheckResult",
    "format_report",
    "run_gradcheck",
    "MetricsReport",
    "TrainAbort",
    "TrainResult",
    "evaluate",
    "evaluate_state",
    "train",
]
