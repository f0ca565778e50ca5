"""Sparse sampling, optical flow, and the weighted temporal fusion map."""

from .flow import (
    FlowField,
    estimate_flow,
    flow_solve_count,
    reset_flow_solve_count,
    solve_flow_batch,
    to_gray,
)
from .fuse import (
    SNIPPET_MAX,
    FusionConfig,
    apply_fusion,
    fuse_flows,
    fusion_map_for_snippet,
    roi_union_mask,
    swtf_preprocess,
)
from .segments import SampledIndices, SegmentPlan, plan_segments, sample_indices
from .wheel import colorize, make_color_wheel

__all__ = [
    "SNIPPET_MAX",
    "FlowField",
    "FusionConfig",
    "SampledIndices",
    "SegmentPlan",
    "apply_fusion",
    "colorize",
    "estimate_flow",
    "flow_solve_count",
    "fuse_flows",
    "fusion_map_for_snippet",
    "make_color_wheel",
    "plan_segments",
    "reset_flow_solve_count",
    "roi_union_mask",
    "sample_indices",
    "solve_flow_batch",
    "swtf_preprocess",
    "to_gray",
]
