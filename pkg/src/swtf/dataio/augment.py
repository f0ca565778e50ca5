"""Snippet-level augmentation: one random crop and one flip per snippet.

The same crop window and flip decision apply to every frame of a snippet so
the motion signal stays coherent. Boxes are re-expressed in the cropped
coordinate frame; a box that keeps less than a quarter of its area is
dropped. If a crop would drop every box the window is re-drawn (fresh
sub-seed, 8 attempts) before falling back to flip-only.
"""

from __future__ import annotations

import numpy as np

from .snippets import BoundingBox, Snippet

MIN_BOX_AREA_KEPT = 0.25


def _flip_box(b: BoundingBox) -> BoundingBox:
    return BoundingBox(
        x1=1.0 - b.x2, y1=b.y1, x2=1.0 - b.x1, y2=b.y2,
        track_id=b.track_id, label=b.label,
    )


def _crop_box(b: BoundingBox, wy1: float, wx1: float, wy2: float, wx2: float) -> BoundingBox | None:
    ix1, ix2 = max(b.x1, wx1), min(b.x2, wx2)
    iy1, iy2 = max(b.y1, wy1), min(b.y2, wy2)
    if ix2 <= ix1 or iy2 <= iy1:
        return None
    kept = (ix2 - ix1) * (iy2 - iy1) / b.area
    if kept < MIN_BOX_AREA_KEPT:
        return None
    sx, sy = wx2 - wx1, wy2 - wy1
    return BoundingBox(
        x1=min(max((ix1 - wx1) / sx, 0.0), 1.0),
        y1=min(max((iy1 - wy1) / sy, 0.0), 1.0),
        x2=min(max((ix2 - wx1) / sx, 0.0), 1.0),
        y2=min(max((iy2 - wy1) / sy, 0.0), 1.0),
        track_id=b.track_id, label=b.label,
    )


def augment(snippet: Snippet, seed: int, crop_fraction: float = 0.8) -> Snippet:
    """Apply a seeded crop+flip to all frames and boxes of a snippet."""
    if not 0.5 < crop_fraction <= 1.0:
        raise ValueError(f"crop_fraction must be in (0.5, 1.0], got {crop_fraction}")

    rng = np.random.default_rng((int(seed), 0x5157))
    flip = bool(rng.integers(0, 2))
    h, w = snippet.frame_shape
    ch = max(2, int(round(h * crop_fraction)))
    cw = max(2, int(round(w * crop_fraction)))

    frames = snippet.frames
    boxes = snippet.boxes
    n_boxes = sum(len(per) for per in boxes)

    if (ch, cw) != (h, w):
        for attempt in range(8):
            sub = np.random.default_rng((int(seed), 0x5157, attempt))
            y0 = int(sub.integers(0, h - ch + 1))
            x0 = int(sub.integers(0, w - cw + 1))
            window = (y0 / h, x0 / w, (y0 + ch) / h, (x0 + cw) / w)
            cropped = [
                [c for b in per if (c := _crop_box(b, *window)) is not None]
                for per in boxes
            ]
            if n_boxes == 0 or any(cropped):
                frames = snippet.frames[:, y0 : y0 + ch, x0 : x0 + cw, :]
                boxes = cropped
                break
        # all attempts emptied the snippet: keep full frames, flip-only

    if flip:
        frames = frames[:, :, ::-1, :]
        boxes = [[_flip_box(b) for b in per] for per in boxes]

    return Snippet(
        frames=np.ascontiguousarray(frames),
        boxes=[list(per) for per in boxes],
        classes=list(snippet.classes),
    )
