"""Optical-flow color wheel: direction -> hue, magnitude -> value.

The wheel is the standard 55-entry construction (six arcs R-Y-G-C-B-M-R of
lengths 15, 6, 4, 11, 13, 6). Direction picks a position on the wheel via
atan2(-v, u) (so rightward is the wheel start and upward motion lands a
quarter-turn along), colors are linearly interpolated between adjacent
entries, and the magnitude channel scales the color toward black.
"""

from __future__ import annotations

import numpy as np

_ARC_LENGTHS = (15, 6, 4, 11, 13, 6)


def make_color_wheel() -> np.ndarray:
    """(55, 3) float64 wheel, channel values in [0, 1], max channel 1 per row."""
    rows = []
    for n, (src, dst) in zip(
        _ARC_LENGTHS,
        [((1, 0, 0), (1, 1, 0)), ((1, 1, 0), (0, 1, 0)), ((0, 1, 0), (0, 1, 1)),
         ((0, 1, 1), (0, 0, 1)), ((0, 0, 1), (1, 0, 1)), ((1, 0, 1), (1, 0, 0))],
    ):
        t = np.arange(n, dtype=np.float64)[:, None] / n
        rows.append(np.asarray(src, dtype=np.float64) * (1.0 - t) + np.asarray(dst) * t)
    wheel = np.concatenate(rows)
    assert wheel.shape == (sum(_ARC_LENGTHS), 3)
    return wheel


_WHEEL = make_color_wheel()


def colorize(u: np.ndarray, v: np.ndarray, value: np.ndarray) -> np.ndarray:
    """Map direction (u, v) and brightness value in [0,1] to a (3, H, W) image.

    Only the direction of (u, v) matters; callers normalize magnitude into
    `value` themselves. Where value is 0 the output is exactly 0.
    """
    ncols = _WHEEL.shape[0]
    angle = np.arctan2(-v, u)
    fk = (angle / np.pi + 1.0) / 2.0 * (ncols - 1)
    k0 = np.floor(fk).astype(np.intp)
    frac = fk - k0
    k0 = np.clip(k0, 0, ncols - 1)
    k1 = (k0 + 1) % ncols
    color = (1.0 - frac[..., None]) * _WHEEL[k0] + frac[..., None] * _WHEEL[k1]
    rgb = color * value[..., None]
    return rgb.transpose(2, 0, 1)
