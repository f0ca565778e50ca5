"""Dataset access for the pipeline: manifests, caching, resize, targets.

Snippets are cached in memory after first load; desk-scale datasets are a
few megabytes of uint8 so eviction is not worth its complexity here. When a
config names no dataset root, a synthetic dataset is generated under the
run directory (once; reuse is safe because generation is seed-determined).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..dataio.snippets import Snippet, load_snippet
from ..dataio.synth import synth_generate
from ..dataio.transforms import resize_bilinear
from .config import RunConfig


class DatasetError(ValueError):
    """Raised for missing manifests or unusable splits."""


def prepare_dataset(config: RunConfig) -> Path:
    """Resolve the dataset root, generating synthetic data if none is named."""
    if config.dataset_root:
        root = Path(config.dataset_root)
        if not (root / "manifest.json").exists():
            raise DatasetError(f"no manifest.json under {root}")
        return root
    root = Path(config.out_dir) / "dataset"
    if not (root / "manifest.json").exists():
        synth_generate(config.synth, seed=config.seed, out_dir=root)
    return root


def load_manifest(root: Path) -> dict[str, list[str]]:
    with open(root / "manifest.json", encoding="utf-8") as f:
        manifest = json.load(f)
    if not isinstance(manifest, dict) or "train" not in manifest or "test" not in manifest:
        raise DatasetError(f"{root}/manifest.json needs 'train' and 'test' lists")
    return manifest


class SnippetStore:
    """Loads snippets by manifest entry, applying the configured resize once."""

    def __init__(self, root: Path, config: RunConfig):
        self.root = Path(root)
        self.config = config
        self.manifest = load_manifest(self.root)
        self._cache: dict[str, Snippet] = {}

    def split(self, name: str) -> list[str]:
        if name not in self.manifest:
            raise DatasetError(f"unknown split {name!r}")
        entries = self.manifest[name]
        if not entries:
            raise DatasetError(f"split {name!r} is empty")
        return list(entries)

    def get(self, entry: str) -> Snippet:
        cached = self._cache.get(entry)
        if cached is not None:
            return cached
        snippet = load_snippet(self.root / entry)
        if self.config.resize is not None:
            th, tw = self.config.resize
            frames = np.stack(
                [
                    np.clip(np.rint(resize_bilinear(f, th, tw)[0]), 0, 255).astype(np.uint8)
                    for f in snippet.frames
                ]
            )
            snippet = Snippet(
                frames=frames,
                boxes=[list(b) for b in snippet.boxes],
                classes=list(snippet.classes),
            )
        if snippet.num_frames != self.config.T:
            raise DatasetError(
                f"{entry}: snippet has {snippet.num_frames} frames, config T={self.config.T}"
            )
        self._cache[entry] = snippet
        return snippet


def subject_targets(
    snippets: list[Snippet],
    subjects: list[tuple[int, int]],
    num_classes: int,
) -> np.ndarray:
    """One-hot (S, num_classes) rows aligned with the model's subject order."""
    onehot = np.zeros((len(subjects), num_classes), dtype=np.float64)
    labels = [s.labels() for s in snippets]
    for row, (b, track_id) in enumerate(subjects):
        label = labels[b][track_id]
        if label >= num_classes:
            raise DatasetError(
                f"label {label} outside the model's {num_classes} classes"
            )
        onehot[row, label] = 1.0
    return onehot


def check_class_count(snippet: Snippet, num_classes: int) -> None:
    """Datasets carrying a class table must agree with the model head."""
    if snippet.classes and len(snippet.classes) != num_classes:
        raise DatasetError(
            f"dataset declares {len(snippet.classes)} classes, model has {num_classes}"
        )
