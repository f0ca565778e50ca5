"""Synthetic motion-direction dataset generator.

Each snippet shows one sprite translating right, left, down, or up at
constant speed over a static noise background. Opposite-direction snippets
are generated in mirrored pairs that share the sprite appearance, the
background, and the *set* of sprite positions (only the traversal order
differs), so no unordered collection of frames can separate the classes;
only motion direction can.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .snippets import BoundingBox, Snippet, write_snippet

CLASS_NAMES = ("right", "left", "down", "up")


class SynthError(ValueError):
    """Raised for infeasible generator specs."""


@dataclass(frozen=True)
class SynthSpec:
    """Geometry and size parameters for the generated dataset."""

    num_classes: int = 4
    snippets_per_class: int = 50
    T: int = 15
    H: int = 64
    W: int = 64
    sprite_size: int = 12
    speed: float = 2.0
    noise_amplitude: int = 20
    train_fraction: float = 0.8

    def __post_init__(self) -> None:
        if not 1 <= self.num_classes <= len(CLASS_NAMES):
            raise SynthError(f"num_classes must be 1..{len(CLASS_NAMES)}")
        if self.T < 2 or self.snippets_per_class < 1:
            raise SynthError("need T >= 2 and at least one snippet per class")
        if not 0.0 <= self.train_fraction <= 1.0:
            raise SynthError("train_fraction must be in [0, 1]")
        margin = self.sprite_size / 2.0 + 1.0
        travel = (self.T - 1) * self.speed
        extent = self.W if self.num_classes <= 2 else min(self.H, self.W)
        if travel + 2.0 * margin > extent - 1.0:
            raise SynthError("infeasible spec (sprite leaves frame)")


def _render_frame(
    background: np.ndarray, color: np.ndarray, cy: float, cx: float, radius: float
) -> tuple[np.ndarray, BoundingBox]:
    """Composite an anti-aliased disk onto the background; return frame + tight box."""
    h, w, _ = background.shape
    yy = np.arange(h, dtype=np.float64)[:, None]
    xx = np.arange(w, dtype=np.float64)[None, :]
    dist = np.sqrt((yy - cy) ** 2 + (xx - cx) ** 2)
    alpha = np.clip(radius + 0.5 - dist, 0.0, 1.0)

    frame = background.astype(np.float64)
    frame += alpha[:, :, None] * (color[None, None, :] - frame)
    frame = np.clip(np.rint(frame), 0, 255).astype(np.uint8)

    ys, xs = np.nonzero(alpha > 1e-3)
    box = BoundingBox(
        x1=xs.min() / w,
        y1=ys.min() / h,
        x2=(xs.max() + 1) / w,
        y2=(ys.max() + 1) / h,
        track_id=0,
        label=0,
    )
    return frame, box


def render_snippet(spec: SynthSpec, label: int, pair_rng: np.random.Generator) -> Snippet:
    """Render one snippet; opposite directions consume pair_rng identically."""
    name = CLASS_NAMES[label]
    axis_vertical = name in ("down", "up")
    reverse = name in ("left", "up")
    h, w, t = spec.H, spec.W, spec.T
    radius = spec.sprite_size / 2.0
    margin = radius + 1.0
    travel = (t - 1) * spec.speed

    # every draw below comes from pair_rng in a fixed order so that the two
    # members of a mirror pair see identical values
    amp = int(spec.noise_amplitude)
    background = pair_rng.integers(
        128 - amp, 128 + amp + 1, size=(h, w, 3)
    ).astype(np.uint8)
    color = pair_rng.integers(110, 256, size=3).astype(np.float64)
    along_extent = (h if axis_vertical else w) - 1.0
    across_extent = (w if axis_vertical else h) - 1.0
    start = pair_rng.uniform(margin, along_extent - margin - travel)
    across = pair_rng.uniform(margin, across_extent - margin)

    positions = start + spec.speed * np.arange(t, dtype=np.float64)
    if reverse:
        positions = positions[::-1]

    frames = np.empty((t, h, w, 3), dtype=np.uint8)
    boxes: list[list[BoundingBox]] = []
    for i in range(t):
        cy, cx = (positions[i], across) if axis_vertical else (across, positions[i])
        frame, box = _render_frame(background, color, cy, cx, radius)
        frames[i] = frame
        boxes.append(
            [BoundingBox(box.x1, box.y1, box.x2, box.y2, track_id=0, label=label)]
        )
    return Snippet(frames=frames, boxes=boxes, classes=list(CLASS_NAMES[: spec.num_classes]))


def synth_generate(spec: SynthSpec, seed: int, out_dir: str | Path) -> Path:
    """Write the full dataset plus a train/test manifest; returns the root."""
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)

    train: list[str] = []
    test: list[str] = []
    n = spec.snippets_per_class
    n_train = int(round(n * spec.train_fraction))
    for label in range(spec.num_classes):
        # mirror pairs share a generator: right/left use stream 0, down/up stream 1
        axis = 1 if CLASS_NAMES[label] in ("down", "up") else 0
        for j in range(n):
            pair_rng = np.random.default_rng((int(seed), axis, j))
            snippet = render_snippet(spec, label, pair_rng)
            rel = f"{CLASS_NAMES[label]}_{j:04d}"
            write_snippet(snippet, root / rel)
            (train if j < n_train else test).append(rel)

    with open(root / "manifest.json", "w", encoding="utf-8") as f:
        json.dump({"train": train, "test": test}, f, indent=1)
        f.write("\n")
    return root
