"""Segment planning and sparse frame sampling.

A snippet of T frames is partitioned into K equal-duration segments
(boundaries floor(i*T/K)) and one frame is drawn per segment: uniformly at
random during training, the segment center during evaluation. Downstream
flow cost is then K-1 solves no matter how long the snippet is.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SegmentPlan:
    """Partition of frame indices {0..T-1} into K contiguous segments."""

    T: int
    K: int
    boundaries: tuple[int, ...]

    def segment(self, i: int) -> range:
        """Frame indices of segment i (half-open [b_i, b_{i+1}))."""
        return range(self.boundaries[i], self.boundaries[i + 1])


@dataclass(frozen=True)
class SampledIndices:
    """One frame index per segment, strictly increasing."""

    indices: tuple[int, ...]


def plan_segments(T: int, K: int) -> SegmentPlan:
    """Partition T frames into K segments with sizes differing by at most 1."""
    if K < 2:
        raise ValueError(f"need at least 2 segments for a flow pair, got K={K}")
    if K > T:
        raise ValueError(f"cannot split T={T} frames into K={K} non-empty segments")
    boundaries = tuple(i * T // K for i in range(K + 1))
    return SegmentPlan(T=T, K=K, boundaries=boundaries)


def sample_indices(plan: SegmentPlan, mode: str, seed: int = 0) -> SampledIndices:
    """Pick one frame per segment: 'random' (seeded) or 'center'."""
    if mode == "center":
        picks = tuple(
            (plan.boundaries[i] + plan.boundaries[i + 1] - 1) // 2
            for i in range(plan.K)
        )
    elif mode == "random":
        rng = np.random.default_rng(seed)
        picks = tuple(
            int(rng.integers(plan.boundaries[i], plan.boundaries[i + 1]))
            for i in range(plan.K)
        )
    else:
        raise ValueError(f"unknown sampling mode {mode!r}")
    return SampledIndices(indices=picks)
