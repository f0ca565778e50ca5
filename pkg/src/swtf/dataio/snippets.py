"""Snippet container plus the directory-layout loader and writer.

A snippet on disk is a directory of ``frame_00001.ppm`` ... ``frame_%05d.ppm``
files plus an ``annotations.json`` holding normalized per-frame subject boxes.
Pixels stay raw uint8 here; value normalization is a separate transform.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ppm import read_ppm, write_ppm

_FRAME_RE = re.compile(r"frame_(\d{5})\.ppm$")


class SnippetError(ValueError):
    """Raised for inconsistent snippet directories or annotations."""


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned subject box in normalized [0, 1] image coordinates."""

    x1: float
    y1: float
    x2: float
    y2: float
    track_id: int
    label: int

    def __post_init__(self) -> None:
        if not (0.0 <= self.x1 < self.x2 <= 1.0 and 0.0 <= self.y1 < self.y2 <= 1.0):
            raise SnippetError(
                f"box coordinates outside image: ({self.x1}, {self.y1}, {self.x2}, {self.y2})"
            )
        if self.track_id < 0:
            raise SnippetError(f"negative track_id {self.track_id}")
        if self.label < 0:
            raise SnippetError(f"negative label {self.label}")

    @property
    def area(self) -> float:
        return (self.x2 - self.x1) * (self.y2 - self.y1)


@dataclass
class Snippet:
    """T ordered raw frames with per-frame boxes and the class-name table.

    frames: (T, H, W, 3) uint8; boxes[t] is sorted by track_id.
    """

    frames: np.ndarray
    boxes: list[list[BoundingBox]]
    classes: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.frames = np.asarray(self.frames)
        if self.frames.ndim != 4 or self.frames.shape[3] != 3:
            raise SnippetError(f"expected (T, H, W, 3) frames, got {self.frames.shape}")
        if self.frames.dtype != np.uint8:
            raise SnippetError(f"expected uint8 frames, got {self.frames.dtype}")
        if self.num_frames < 2:
            raise SnippetError(f"snippet needs at least 2 frames, got {self.num_frames}")
        if len(self.boxes) != self.num_frames:
            raise SnippetError(
                f"{len(self.boxes)} box lists for {self.num_frames} frames"
            )
        for t, per_frame in enumerate(self.boxes):
            ids = [b.track_id for b in per_frame]
            if len(ids) != len(set(ids)):
                raise SnippetError(f"duplicate (frame, track_id) in frame {t + 1}")
            per_frame.sort(key=lambda b: b.track_id)

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def frame_shape(self) -> tuple[int, int]:
        return self.frames.shape[1], self.frames.shape[2]

    def track_ids(self) -> list[int]:
        """All track ids, sorted; each appears in at least one frame."""
        ids: set[int] = set()
        for per_frame in self.boxes:
            ids.update(b.track_id for b in per_frame)
        return sorted(ids)

    def labels(self) -> dict[int, int]:
        """track_id -> label; a track must not change label mid-snippet."""
        out: dict[int, int] = {}
        for per_frame in self.boxes:
            for b in per_frame:
                if out.setdefault(b.track_id, b.label) != b.label:
                    raise SnippetError(f"track {b.track_id} changes label")
        return out


def load_snippet(path: str | Path) -> Snippet:
    """Load a snippet directory, validating numbering and annotations."""
    root = Path(path)
    indices: dict[int, Path] = {}
    for f in root.iterdir():
        m = _FRAME_RE.search(f.name)
        if m:
            indices[int(m.group(1))] = f
    if not indices:
        raise SnippetError(f"no frame_%05d.ppm files in {root}")
    count = max(indices)
    missing = sorted(set(range(1, count + 1)) - set(indices))
    if missing:
        raise SnippetError(f"gap in frame numbering: missing frame {missing[0]:05d}")

    decoded = [read_ppm(indices[i]) for i in range(1, count + 1)]
    if len({f.shape for f in decoded}) > 1:
        raise SnippetError("frames disagree on dimensions")
    frames = np.stack(decoded)

    ann_path = root / "annotations.json"
    if not ann_path.exists():
        raise SnippetError(f"missing annotations.json in {root}")
    with open(ann_path, encoding="utf-8") as f:
        ann = json.load(f)

    declared_t = int(ann["T"])
    if declared_t != count:
        raise SnippetError(f"annotations declare T={declared_t} but found {count} frames")
    classes = [str(c) for c in ann.get("classes", [])]

    boxes: list[list[BoundingBox]] = [[] for _ in range(count)]
    for entry in ann.get("frames", []):
        idx = int(entry["index"])
        if not 1 <= idx <= count:
            raise SnippetError(f"annotation out of range: frame index {idx} of {count}")
        for raw in entry.get("boxes", []):
            box = BoundingBox(
                x1=float(raw["x1"]),
                y1=float(raw["y1"]),
                x2=float(raw["x2"]),
                y2=float(raw["y2"]),
                track_id=int(raw["track_id"]),
                label=int(raw["label"]),
            )
            if classes and box.label >= len(classes):
                raise SnippetError(
                    f"label {box.label} outside class table of size {len(classes)}"
                )
            if any(b.track_id == box.track_id for b in boxes[idx - 1]):
                raise SnippetError(
                    f"duplicate (frame, track_id) = ({idx}, {box.track_id})"
                )
            boxes[idx - 1].append(box)

    return Snippet(frames=frames, boxes=boxes, classes=classes)


def write_snippet(snippet: Snippet, path: str | Path) -> Path:
    """Write a snippet directory in the layout load_snippet expects."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    for t in range(snippet.num_frames):
        write_ppm(root / f"frame_{t + 1:05d}.ppm", snippet.frames[t])
    ann = {
        "T": snippet.num_frames,
        "classes": list(snippet.classes),
        "frames": [
            {
                "index": t + 1,
                "boxes": [
                    {
                        "track_id": b.track_id,
                        "x1": b.x1,
                        "y1": b.y1,
                        "x2": b.x2,
                        "y2": b.y2,
                        "label": b.label,
                    }
                    for b in snippet.boxes[t]
                ],
            }
            for t in range(snippet.num_frames)
        ],
    }
    with open(root / "annotations.json", "w", encoding="utf-8") as f:
        json.dump(ann, f, indent=1)
        f.write("\n")
    return root
