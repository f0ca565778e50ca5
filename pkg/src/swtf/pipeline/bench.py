"""Sparse-vs-dense flow cost benchmark.

For each requested resolution a synthetic snippet is rendered and flows are
solved two ways: the sparse strategy (one frame per segment, K-1 solves) and
the dense baseline (every consecutive pair, T-1 solves). The solve counts
come from the flow module's invocation counter, not arithmetic, so the
constant-cost claim is measured rather than assumed.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ..dataio.synth import SynthSpec, render_snippet
from ..fusion.flow import flow_solve_count, reset_flow_solve_count, solve_flow_batch, to_gray
from ..fusion.segments import plan_segments, sample_indices
from .config import RunConfig


@dataclass(frozen=True)
class BenchRow:
    height: int
    width: int
    sparse_solves: int
    dense_solves: int
    sparse_seconds: float
    dense_seconds: float


def _snippet_for(height: int, width: int, t: int):
    """A feasible moving-sprite snippet at the requested resolution."""
    size = max(4, min(height, width) // 6)
    margin = size / 2.0 + 1.0
    speed = (min(height, width) - 1.0 - 2.0 * margin) / (t - 1) / 1.5
    spec = SynthSpec(
        num_classes=4, snippets_per_class=1, T=t, H=height, W=width,
        sprite_size=size, speed=speed,
    )
    return render_snippet(spec, 0, np.random.default_rng((height, width, t)))


def bench(config: RunConfig, resolutions: list[tuple[int, int]]) -> list[BenchRow]:
    """One row per resolution; counts must not depend on the resolution."""
    rows = []
    k, t = config.K, config.T
    for height, width in resolutions:
        snippet = _snippet_for(height, width, t)
        gray = np.stack([to_gray(f) for f in snippet.frames])
        plan = plan_segments(t, k)
        picked = sample_indices(plan, "center")
        sampled = gray[list(picked.indices)]

        reset_flow_solve_count()
        start = time.perf_counter()
        solve_flow_batch(
            sampled[:-1], sampled[1:],
            alpha=config.fusion.flow_alpha, iterations=config.fusion.flow_iterations,
        )
        sparse_seconds = time.perf_counter() - start
        sparse_solves = flow_solve_count()

        reset_flow_solve_count()
        start = time.perf_counter()
        solve_flow_batch(
            gray[:-1], gray[1:],
            alpha=config.fusion.flow_alpha, iterations=config.fusion.flow_iterations,
        )
        dense_seconds = time.perf_counter() - start
        dense_solves = flow_solve_count()
        reset_flow_solve_count()

        rows.append(
            BenchRow(
                height=height, width=width,
                sparse_solves=sparse_solves, dense_solves=dense_solves,
                sparse_seconds=sparse_seconds, dense_seconds=dense_seconds,
            )
        )
    return rows


def format_table(rows: list[BenchRow]) -> str:
    header = (
        f"{'resolution':>12} {'sparse solves':>14} {'dense solves':>13} "
        f"{'sparse s':>10} {'dense s':>10}"
    )
    lines = [header]
    for r in rows:
        lines.append(
            f"{r.height:>5}x{r.width:<6} {r.sparse_solves:>14} {r.dense_solves:>13} "
            f"{r.sparse_seconds:>10.3f} {r.dense_seconds:>10.3f}"
        )
    return "\n".join(lines)


def write_json(rows: list[BenchRow], path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as f:
        json.dump([asdict(r) for r in rows], f, indent=1)
        f.write("\n")
    return path
