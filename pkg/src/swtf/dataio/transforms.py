"""Pixel-value normalization and bilinear resizing.

Normalization maps raw 8-bit channel values onto [-1, +1]:
``value = (raw / 255 - 0.5) * 2``. Resizing uses the half-pixel-center
convention (source coordinate ``(dst + 0.5) * scale - 0.5``, clamped), the
same convention the ROI-aligned cropping uses, so geometry is consistent
across the toolkit.
"""

from __future__ import annotations

import numpy as np


def normalize_values(raw: np.ndarray) -> np.ndarray:
    """Map raw 8-bit channel values (any shape) onto [-1, +1] as float64."""
    return (np.asarray(raw, dtype=np.float64) / 255.0 - 0.5) * 2.0


def denormalize_values(values: np.ndarray) -> np.ndarray:
    """Inverse of normalize_values, rounded and clipped back to uint8."""
    raw = (np.asarray(values, dtype=np.float64) / 2.0 + 0.5) * 255.0
    return np.clip(np.rint(raw), 0, 255).astype(np.uint8)


def normalize_frame(raw: np.ndarray) -> np.ndarray:
    """Normalize an (H, W, 3) uint8 frame to a (3, H, W) float64 frame in [-1, 1]."""
    raw = np.asarray(raw)
    if raw.ndim != 3 or raw.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) raw frame, got shape {raw.shape}")
    return normalize_values(raw.transpose(2, 0, 1))


def _source_coords(target: int, source: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Half-pixel-center source coordinates split into (floor index, next index, fraction)."""
    scale = source / target
    coords = (np.arange(target, dtype=np.float64) + 0.5) * scale - 0.5
    coords = np.clip(coords, 0.0, source - 1.0)
    lo = np.floor(coords).astype(np.intp)
    hi = np.minimum(lo + 1, source - 1)
    frac = coords - lo
    return lo, hi, frac


def resize_bilinear(
    frame: np.ndarray, target_h: int, target_w: int
) -> tuple[np.ndarray, tuple[float, float]]:
    """Bilinearly resize a frame; returns (resized, (scale_y, scale_x)).

    Accepts model-order (C, H, W) frames (any float/int dtype) or raw
    (H, W, 3) uint8 frames; the layout of the input is preserved. Scale
    factors are target/source. Normalized boxes are resolution-independent,
    so annotations never need touching.
    """
    if target_h < 8 or target_w < 8:
        raise ValueError(f"target size {target_h}x{target_w} below minimum 8x8")
    frame = np.asarray(frame)
    if frame.ndim != 3:
        raise ValueError(f"expected 3-d frame, got shape {frame.shape}")
    channels_last = frame.dtype == np.uint8 and frame.shape[2] == 3
    chw = frame.transpose(2, 0, 1) if channels_last else frame
    chw = chw.astype(np.float64, copy=False)
    _, src_h, src_w = chw.shape

    ylo, yhi, fy = _source_coords(target_h, src_h)
    xlo, xhi, fx = _source_coords(target_w, src_w)
    fy = fy[:, None]
    fx = fx[None, :]

    # lerp as a + t*(b - a): exact for identity resizes and constant frames
    top = chw[:, ylo][:, :, xlo]
    top = top + fx * (chw[:, ylo][:, :, xhi] - top)
    bot = chw[:, yhi][:, :, xlo]
    bot = bot + fx * (chw[:, yhi][:, :, xhi] - bot)
    out = top + fy * (bot - top)

    if channels_last:
        out = out.transpose(1, 2, 0)
    return out, (target_h / src_h, target_w / src_w)
