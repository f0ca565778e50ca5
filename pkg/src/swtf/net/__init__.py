"""Network primitives with exact backwards, and the snippet classifier."""

from . import ops
from .model import (
    ModelState,
    NetConfig,
    collect_instances,
    init_model,
    model_backward,
    model_forward,
)

__all__ = [
    "ModelState",
    "NetConfig",
    "collect_instances",
    "init_model",
    "model_backward",
    "model_forward",
    "ops",
]
