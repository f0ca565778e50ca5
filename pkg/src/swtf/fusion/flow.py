"""Dense optical flow via the global-smoothness (Horn-Schunck) model.

Minimizes sum((Ix*u + Iy*v + It)^2) + alpha^2 * (|grad u|^2 + |grad v|^2)
by Jacobi iteration on grayscale inputs. The iteration starts from the
global constant-flow least-squares fit rather than zero: with the default
alpha the smoothness term dominates, and a zero start would need thousands
of sweeps to pick up a uniform translation that the 2x2 normal system
already determines directly. Jacobi then supplies the spatial structure.

A module-level counter tracks how many frame pairs have been solved, which
is what the sparse-vs-dense benchmark asserts on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_solved_pairs = 0


def flow_solve_count() -> int:
    """Number of frame pairs solved since the last reset."""
    return _solved_pairs


def reset_flow_solve_count() -> None:
    global _solved_pairs
    _solved_pairs = 0


@dataclass(frozen=True)
class FlowField:
    """Per-pixel displacement in pixels/frame; u rightward, v downward."""

    u: np.ndarray
    v: np.ndarray

    @property
    def height(self) -> int:
        return self.u.shape[0]

    @property
    def width(self) -> int:
        return self.u.shape[1]

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.u, self.v)


def to_gray(frame: np.ndarray) -> np.ndarray:
    """Luma in [0,1] from an (H, W, 3) uint8 frame; 2-d floats pass through."""
    frame = np.asarray(frame)
    if frame.ndim == 2:
        return frame.astype(np.float64, copy=False)
    if frame.ndim == 3 and frame.shape[2] == 3:
        rgb = frame.astype(np.float64) / 255.0
        return 0.299 * rgb[:, :, 0] + 0.587 * rgb[:, :, 1] + 0.114 * rgb[:, :, 2]
    raise ValueError(f"expected (H, W, 3) uint8 or (H, W) gray frame, got {frame.shape}")


def _neighbor_average(x: np.ndarray) -> np.ndarray:
    """Weighted 8-neighborhood average ([1,2,1] x [1,2,1] stencil, center removed)."""
    pad = [(0, 0)] * (x.ndim - 2) + [(1, 1), (1, 1)]
    p = np.pad(x, pad, mode="edge")
    rows = p[..., :-2, 1:-1] + 2.0 * p[..., 1:-1, 1:-1] + p[..., 2:, 1:-1]
    rows_l = p[..., :-2, :-2] + 2.0 * p[..., 1:-1, :-2] + p[..., 2:, :-2]
    rows_r = p[..., :-2, 2:] + 2.0 * p[..., 1:-1, 2:] + p[..., 2:, 2:]
    return (rows_l + 2.0 * rows + rows_r - 4.0 * x) / 12.0


def _constant_flow_fit(
    ix: np.ndarray, iy: np.ndarray, it: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares uniform (u, v) per batch item; zero when ill-conditioned."""
    axes = (-2, -1)
    a = np.sum(ix * ix, axis=axes)
    b = np.sum(ix * iy, axis=axes)
    c = np.sum(iy * iy, axis=axes)
    p = -np.sum(ix * it, axis=axes)
    q = -np.sum(iy * it, axis=axes)
    det = a * c - b * b
    scale = np.maximum(a, c)
    ok = det > 1e-12 * np.maximum(scale, 1e-300) ** 2
    safe = np.where(ok, det, 1.0)
    u0 = np.where(ok, (c * p - b * q) / safe, 0.0)
    v0 = np.where(ok, (a * q - b * p) / safe, 0.0)
    return u0, v0


def solve_flow_batch(
    gray_a: np.ndarray, gray_b: np.ndarray, alpha: float, iterations: int
) -> tuple[np.ndarray, np.ndarray]:
    """Solve N flow pairs at once; inputs (N, H, W) grayscale in [0,1]."""
    global _solved_pairs
    if gray_a.shape != gray_b.shape:
        raise ValueError(f"frame shapes differ: {gray_a.shape} vs {gray_b.shape}")
    if alpha <= 0 or iterations < 1:
        raise ValueError("need alpha > 0 and iterations >= 1")

    # derivative estimates averaged over both frames center the linearization
    ay, ax = np.gradient(gray_a, axis=(-2, -1))
    by, bx = np.gradient(gray_b, axis=(-2, -1))
    ix = 0.5 * (ax + bx)
    iy = 0.5 * (ay + by)
    it = gray_b - gray_a

    den = alpha * alpha + ix * ix + iy * iy
    u0, v0 = _constant_flow_fit(ix, iy, it)
    u = np.broadcast_to(u0[..., None, None], gray_a.shape).copy()
    v = np.broadcast_to(v0[..., None, None], gray_a.shape).copy()

    uv = np.stack([u, v])
    for _ in range(iterations):
        avg = _neighbor_average(uv)
        resid = (ix * avg[0] + iy * avg[1] + it) / den
        uv[0] = avg[0] - ix * resid
        uv[1] = avg[1] - iy * resid

    _solved_pairs += gray_a.shape[0] if gray_a.ndim == 3 else 1
    return uv[0], uv[1]


def estimate_flow(
    frame_a: np.ndarray,
    frame_b: np.ndarray,
    alpha: float = 10.0,
    iterations: int = 200,
) -> FlowField:
    """Dense flow from frame_a to frame_b (positive u rightward, v downward)."""
    ga = to_gray(frame_a)[None]
    gb = to_gray(frame_b)[None]
    u, v = solve_flow_batch(ga, gb, alpha=alpha, iterations=iterations)
    return FlowField(u=u[0], v=v[0])
