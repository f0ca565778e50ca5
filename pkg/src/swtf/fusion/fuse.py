"""Weighted temporal fusion: flow sum, ROI masking, colorization, application.

The K-1 sampled flows are combined as a weighted per-pixel vector sum,
zeroed outside the (dilated) union of subject boxes, and rendered through
the flow color wheel with the magnitude channel normalized by the snippet
maximum (or a fixed cap). The resulting [0,1] map multiplies every frame of
the snippet, either literally or lifted by a blend floor so appearance
survives in motionless regions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..dataio.snippets import BoundingBox, Snippet
from ..dataio.transforms import normalize_frame
from .flow import FlowField, solve_flow_batch, to_gray
from .segments import SampledIndices, plan_segments, sample_indices
from .wheel import colorize

SNIPPET_MAX = "snippet-max"


@dataclass(frozen=True)
class FusionConfig:
    """Knobs for sampling, the flow solver, and map construction."""

    K: int = 3
    weights: tuple[float, ...] | None = None  # None -> 0.033 per flow
    flow_alpha: float = 10.0
    flow_iterations: int = 200
    normalizer: float | str = SNIPPET_MAX
    normalizer_floor: float = 1e-6
    roi_masking: bool = True
    roi_dilation: float = 0.1
    mode: str = "blended"
    blend_floor: float = 0.25

    def __post_init__(self) -> None:
        if self.K < 2:
            raise ValueError("K must be at least 2")
        if self.weights is not None:
            w = tuple(float(x) for x in self.weights)
            if len(w) != self.K - 1:
                raise ValueError(f"need K-1={self.K - 1} weights, got {len(w)}")
            if any(x < 0 for x in w):
                raise ValueError("negative weights")
            if not any(x > 0 for x in w):
                raise ValueError("at least one weight must be positive")
            object.__setattr__(self, "weights", w)
        if self.mode not in ("blended", "multiplicative"):
            raise ValueError(f"unknown fusion mode {self.mode!r}")
        if not 0.0 <= self.blend_floor <= 1.0:
            raise ValueError("blend floor must be in [0, 1]")
        if isinstance(self.normalizer, str) and self.normalizer != SNIPPET_MAX:
            raise ValueError(f"unknown normalizer {self.normalizer!r}")

    def flow_weights(self) -> tuple[float, ...]:
        return self.weights if self.weights is not None else (0.033,) * (self.K - 1)


def roi_union_mask(
    boxes_per_frame: list[list[BoundingBox]],
    height: int,
    width: int,
    dilation: float,
) -> np.ndarray:
    """Boolean (H, W) union of all subject boxes, each grown per side by
    dilation x its own width/height and clamped to the image."""
    mask = np.zeros((height, width), dtype=bool)
    for per_frame in boxes_per_frame:
        for b in per_frame:
            dx = dilation * (b.x2 - b.x1)
            dy = dilation * (b.y2 - b.y1)
            x_lo = int(np.floor(max(b.x1 - dx, 0.0) * width))
            x_hi = int(np.ceil(min(b.x2 + dx, 1.0) * width))
            y_lo = int(np.floor(max(b.y1 - dy, 0.0) * height))
            y_hi = int(np.ceil(min(b.y2 + dy, 1.0) * height))
            mask[y_lo:y_hi, x_lo:x_hi] = True
    return mask


def fuse_flows(
    flows: list[FlowField],
    weights: tuple[float, ...],
    boxes_per_frame: list[list[BoundingBox]],
    config: FusionConfig,
) -> np.ndarray:
    """Weighted flow sum -> masked -> colorized (3, H, W) map in [0, 1]."""
    if len(flows) != len(weights):
        raise ValueError(f"{len(flows)} flows but {len(weights)} weights")
    if any(w < 0 for w in weights):
        raise ValueError("negative weights")
    h, w = flows[0].u.shape
    if any(f.u.shape != (h, w) for f in flows):
        raise ValueError("flows disagree on shape")

    u = np.zeros((h, w), dtype=np.float64)
    v = np.zeros((h, w), dtype=np.float64)
    for wt, f in zip(weights, flows):
        u += wt * f.u
        v += wt * f.v

    if config.roi_masking:
        mask = roi_union_mask(boxes_per_frame, h, w, config.roi_dilation)
        u = np.where(mask, u, 0.0)
        v = np.where(mask, v, 0.0)

    mag = np.sqrt(u * u + v * v)
    if isinstance(config.normalizer, str):
        norm = float(mag.max())
    else:
        norm = float(config.normalizer)
    if norm < config.normalizer_floor:
        return np.zeros((3, h, w), dtype=np.float64)

    # dividing the field (not just the magnitude) keeps colorization inputs
    # invariant under exact rescaling of the weights
    nu = u / norm
    nv = v / norm
    value = np.minimum(mag / norm, 1.0)
    return colorize(nu, nv, value)


def apply_fusion(frames: np.ndarray, fusion_map: np.ndarray, config: FusionConfig) -> np.ndarray:
    """Multiply the map into every frame; blended mode lifts it by the floor."""
    frames = np.asarray(frames)
    single = frames.ndim == 3
    if single:
        frames = frames[None]
    if frames.shape[1:] != fusion_map.shape:
        raise ValueError(
            f"frames {frames.shape[1:]} and fusion map {fusion_map.shape} disagree"
        )
    if config.mode == "multiplicative":
        factor = fusion_map
    else:
        lam = config.blend_floor
        factor = lam + (1.0 - lam) * fusion_map
    fused = factor[None] * frames
    return fused[0] if single else fused


def fusion_map_for_snippet(
    snippet: Snippet, config: FusionConfig, mode: str, seed: int = 0
) -> tuple[np.ndarray, SampledIndices]:
    """Sample frames, solve the K-1 flows, and build the snippet's fusion map."""
    t = snippet.num_frames
    if t < config.K:
        raise ValueError(f"snippet has {t} frames but K={config.K}")
    plan = plan_segments(t, config.K)
    picked = sample_indices(plan, mode, seed)

    gray = np.stack([to_gray(snippet.frames[i]) for i in picked.indices])
    u, v = solve_flow_batch(
        gray[:-1], gray[1:], alpha=config.flow_alpha, iterations=config.flow_iterations
    )
    flows = [FlowField(u=u[i], v=v[i]) for i in range(config.K - 1)]
    return fuse_flows(flows, config.flow_weights(), snippet.boxes, config), picked


def swtf_preprocess(
    snippet: Snippet, config: FusionConfig, mode: str, seed: int = 0
) -> tuple[np.ndarray, SampledIndices]:
    """Full per-snippet preprocessing: sample, solve K-1 flows, fuse, apply.

    Returns ((T, 3, H, W) fused normalized frames, sampled indices). In
    blended mode with blend floor 1 the map cannot affect the output, so the
    flow solves are skipped outright and the frames are only normalized.
    """
    normalized = np.stack([normalize_frame(f) for f in snippet.frames])

    if config.mode == "blended" and config.blend_floor == 1.0:
        t = snippet.num_frames
        if t < config.K:
            raise ValueError(f"snippet has {t} frames but K={config.K}")
        picked = sample_indices(plan_segments(t, config.K), mode, seed)
        return normalized, picked

    fusion_map, picked = fusion_map_for_snippet(snippet, config, mode, seed)
    return apply_fusion(normalized, fusion_map, config), picked
