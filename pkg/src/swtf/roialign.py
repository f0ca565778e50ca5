"""ROIAlign: quantization-free box cropping onto a fixed P x P grid.

Boxes arrive normalized to [0,1] of the original image and are scaled by
the feature-map size, so the same box crops any backbone stage. Each box is
split into P x P equal bins; a small regular grid of points per bin is
read off the map by bilinear interpolation (half-pixel centers, edge
clamp, matching the resize convention) and averaged. The backward pass
scatters with the identical weights, making it the exact adjoint of the
forward map; boxes themselves receive no gradient.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataio.snippets import BoundingBox

MIN_BOX_EXTENT = 1e-6


@dataclass(frozen=True)
class RoiConfig:
    """crop_size is P; samples_per_bin counts points per bin along each axis."""

    crop_size: int = 5
    samples_per_bin: int = 2

    def __post_init__(self) -> None:
        if self.crop_size < 1 or self.samples_per_bin < 1:
            raise ValueError("crop_size and samples_per_bin must be >= 1")


def _as_box_array(boxes) -> np.ndarray:
    """(N, 4) float64 of (x1, y1, x2, y2) from BoundingBox objects or tuples."""
    rows = [
        (b.x1, b.y1, b.x2, b.y2) if isinstance(b, BoundingBox) else tuple(b)
        for b in boxes
    ]
    out = np.asarray(rows, dtype=np.float64).reshape(len(rows), 4)
    return out


def _axis_samples(
    lo: np.ndarray, hi: np.ndarray, p: int, n: int, size: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-box sample indices and fractions along one axis: (N, P*n) each."""
    extent = hi - lo
    degenerate = extent < MIN_BOX_EXTENT
    if np.any(degenerate):
        center = 0.5 * (lo + hi)
        lo = np.where(degenerate, center - 0.5 * MIN_BOX_EXTENT, lo)
        extent = np.where(degenerate, MIN_BOX_EXTENT, extent)
    fractions = (
        (np.arange(p, dtype=np.float64)[:, None]
         + (np.arange(n, dtype=np.float64)[None, :] + 0.5) / n)
        / p
    ).reshape(-1)
    coords = lo[:, None] + fractions[None, :] * extent[:, None]
    z = np.clip(coords - 0.5, 0.0, float(size - 1))
    i0 = np.floor(z).astype(np.intp)
    i1 = np.minimum(i0 + 1, size - 1)
    return i0, i1, z - i0


def _gather(flat: np.ndarray, lin: np.ndarray) -> np.ndarray:
    """flat: (N, C, H*W); lin: (N, S) -> (N, C, S)."""
    n, c, _ = flat.shape
    return np.take_along_axis(flat, lin[:, None, :].repeat(c, axis=1), axis=2)


def roi_align_forward_batch(
    featmaps: np.ndarray, boxes: np.ndarray, map_index: np.ndarray, config: RoiConfig
) -> np.ndarray:
    """Crop boxes out of a stack of maps: (M,C,H,W) -> (N,C,P,P).

    boxes is (N, 4) normalized (x1, y1, x2, y2); map_index[i] names the map
    box i reads from.
    """
    m, c, h, w = featmaps.shape
    p, n = config.crop_size, config.samples_per_bin
    y0, y1, fy = _axis_samples(boxes[:, 1] * h, boxes[:, 3] * h, p, n, h)
    x0, x1, fx = _axis_samples(boxes[:, 0] * w, boxes[:, 2] * w, p, n, w)

    flat = featmaps.reshape(m, c, h * w)[map_index]
    pn = p * n
    out = np.zeros((len(boxes), c, pn, pn), dtype=featmaps.dtype)
    for yi, wy in ((y0, 1.0 - fy), (y1, fy)):
        for xi, wx in ((x0, 1.0 - fx), (x1, fx)):
            lin = (yi[:, :, None] * w + xi[:, None, :]).reshape(len(boxes), -1)
            vals = _gather(flat, lin).reshape(len(boxes), c, pn, pn)
            out += (wy[:, :, None] * wx[:, None, :])[:, None] * vals
    return out.reshape(len(boxes), c, p, n, p, n).mean(axis=(3, 5))


def roi_align_backward_batch(
    grad_out: np.ndarray,
    boxes: np.ndarray,
    map_index: np.ndarray,
    config: RoiConfig,
    featmaps_shape: tuple[int, int, int, int],
) -> np.ndarray:
    """Adjoint of roi_align_forward_batch: (N,C,P,P) -> (M,C,H,W)."""
    m, c, h, w = featmaps_shape
    p, n = config.crop_size, config.samples_per_bin
    if grad_out.shape != (len(boxes), c, p, p):
        raise ValueError(f"grad shape {grad_out.shape} != {(len(boxes), c, p, p)}")
    y0, y1, fy = _axis_samples(boxes[:, 1] * h, boxes[:, 3] * h, p, n, h)
    x0, x1, fx = _axis_samples(boxes[:, 0] * w, boxes[:, 2] * w, p, n, w)

    share = np.repeat(np.repeat(grad_out, n, axis=2), n, axis=3) / float(n * n)
    offsets = (map_index[:, None, None, None] * c
               + np.arange(c)[None, :, None, None]) * (h * w)
    total = np.zeros(m * c * h * w, dtype=np.float64)
    for yi, wy in ((y0, 1.0 - fy), (y1, fy)):
        for xi, wx in ((x0, 1.0 - fx), (x1, fx)):
            lin = yi[:, :, None] * w + xi[:, None, :]
            idx = (offsets + lin[:, None, :, :]).ravel()
            vals = ((wy[:, :, None] * wx[:, None, :])[:, None] * share).ravel()
            total += np.bincount(idx, weights=vals, minlength=total.size)
    return total.reshape(m, c, h, w).astype(grad_out.dtype, copy=False)


def roi_align_forward(featmap: np.ndarray, boxes, config: RoiConfig) -> np.ndarray:
    """Crop each box from one (C,H,W) map; returns (N, C, P, P)."""
    arr = _as_box_array(boxes)
    idx = np.zeros(len(arr), dtype=np.intp)
    return roi_align_forward_batch(featmap[None], arr, idx, config)


def roi_align_backward(
    grad_out: np.ndarray, boxes, config: RoiConfig, featmap_shape: tuple[int, int, int]
) -> np.ndarray:
    """Scatter per-box gradients back onto a single (C,H,W) map."""
    arr = _as_box_array(boxes)
    idx = np.zeros(len(arr), dtype=np.intp)
    return roi_align_backward_batch(
        np.asarray(grad_out), arr, idx, config, (1, *featmap_shape)
    )[0]
