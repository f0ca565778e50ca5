"""Visualization dumps: render the fusion map and the fused frames as PPMs."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..dataio.ppm import write_ppm
from ..dataio.snippets import Snippet, load_snippet
from ..dataio.transforms import denormalize_values, normalize_frame, resize_bilinear
from ..fusion.fuse import apply_fusion, fusion_map_for_snippet
from .config import RunConfig


def fuse_dump(config: RunConfig, snippet_path: str | Path, out_dir: str | Path) -> Path:
    """Write `xF.ppm` (the map) and `fused_%05d.ppm` for every frame.

    Sampling uses the same seed derivation as training epoch 0, so reruns
    with one config produce byte-identical files.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    snippet = load_snippet(snippet_path)
    if config.resize is not None:
        th, tw = config.resize
        frames = np.stack(
            [
                np.clip(np.rint(resize_bilinear(f, th, tw)[0]), 0, 255).astype(np.uint8)
                for f in snippet.frames
            ]
        )
        snippet = Snippet(
            frames=frames,
            boxes=[list(b) for b in snippet.boxes],
            classes=list(snippet.classes),
        )

    seed = (config.seed, 2, 0, 0)
    fusion_map, _ = fusion_map_for_snippet(snippet, config.fusion, "random", seed)
    write_ppm(
        out / "xF.ppm",
        np.clip(np.rint(fusion_map * 255.0), 0, 255).astype(np.uint8).transpose(1, 2, 0),
    )

    normalized = np.stack([normalize_frame(f) for f in snippet.frames])
    fused = apply_fusion(normalized, fusion_map, config.fusion)
    for t in range(fused.shape[0]):
        write_ppm(
            out / f"fused_{t + 1:05d}.ppm",
            denormalize_values(fused[t]).transpose(1, 2, 0),
        )
    return out
