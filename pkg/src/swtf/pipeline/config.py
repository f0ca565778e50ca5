"""Run configuration: one nested dataclass tree, strict JSON loading.

Config files are JSON whose keys mirror the dataclass field names exactly,
nested objects included. Unknown keys are an error, not a warning: silently
ignored typos in experiment configs are how wrong results get published.
Every field has a default, so `{}` is a valid config that trains on a
freshly generated synthetic dataset.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import get_type_hints

import numpy as np

from ..dataio.synth import SynthSpec
from ..fusion.fuse import FusionConfig
from ..net.model import NetConfig
from ..optim import LrSchedule


class ConfigError(ValueError):
    """Raised for malformed or unknown configuration content."""


@dataclass(frozen=True)
class OptimizerConfig:
    """Adam hyperparameters shared by every parameter tensor."""

    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 1e-4


@dataclass(frozen=True)
class RunConfig:
    """Everything a training or evaluation run needs, with pinned defaults."""

    dataset_root: str = ""
    out_dir: str = "runs/run"
    T: int = 15
    K: int = 3
    batch_size: int = 2
    epochs: int = 80
    resize: tuple[int, int] | None = None
    fusion: FusionConfig = field(default_factory=FusionConfig)
    net: NetConfig = field(default_factory=NetConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    schedule: LrSchedule = field(default_factory=LrSchedule)
    synth: SynthSpec = field(default_factory=SynthSpec)
    seed: int = 0
    deterministic: bool = True
    mode: str = "train"
    dtype: str = "float64"
    eval_every: int = 0
    target_accuracy: float = 0.0

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.T < self.K:
            raise ConfigError(f"T={self.T} must be >= K={self.K}")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if self.mode not in ("train", "eval"):
            raise ConfigError(f"mode must be 'train' or 'eval', got {self.mode!r}")
        if self.dtype not in ("float64", "float32"):
            raise ConfigError(f"dtype must be float64 or float32, got {self.dtype!r}")
        if not 0.0 <= self.target_accuracy <= 1.0:
            raise ConfigError("target_accuracy must be in [0, 1]")
        if self.fusion.K != self.K:
            object.__setattr__(self, "fusion", replace(self.fusion, K=self.K))

    @property
    def np_dtype(self):
        return np.float64 if self.dtype == "float64" else np.float32

    def trajectory_text(self) -> str:
        """Canonical text of every field that shapes the parameter trajectory.

        Budget/plumbing knobs (epochs, out_dir, eval stride, early-stop
        target, mode) are masked out: two runs agreeing here produce
        bit-identical parameters epoch for epoch, so a checkpoint from one
        may seed the other.
        """
        neutral = replace(
            self,
            out_dir="",
            epochs=0,
            eval_every=0,
            target_accuracy=0.0,
            mode="train",
        )
        return config_to_text(neutral)


def _coerce(value):
    if isinstance(value, list):
        return tuple(_coerce(v) for v in value)
    return value


def _build(cls, data, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected an object, got {type(data).__name__}")
    hints = get_type_hints(cls)
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        where = f" in {path}" if path else ""
        raise ConfigError(f"unknown config keys{where}: {', '.join(unknown)}")
    kwargs = {}
    for name, value in data.items():
        sub = f"{path}.{name}" if path else name
        hint = hints.get(name)
        if dataclasses.is_dataclass(hint):
            kwargs[name] = _build(hint, value, sub)
        else:
            kwargs[name] = _coerce(value)
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path or 'config'}: {exc}") from exc


def config_from_dict(data: dict) -> RunConfig:
    """Build a RunConfig from parsed JSON, rejecting unknown keys."""
    return _build(RunConfig, data, "")


def dataclass_from_dict(cls, data: dict, path: str = ""):
    """Strictly build any config dataclass (used for synth spec files)."""
    return _build(cls, data, path)


def load_config(path: str | Path) -> RunConfig:
    with open(path, encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(data)


def config_to_text(config: RunConfig) -> str:
    """Canonical JSON snapshot (stored inside checkpoints)."""
    return json.dumps(dataclasses.asdict(config), sort_keys=True, separators=(",", ":"))


def config_from_text(text: str) -> RunConfig:
    return config_from_dict(json.loads(text))
