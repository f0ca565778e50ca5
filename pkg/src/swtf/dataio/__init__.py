"""Frame and snippet I/O: PPM codec, normalization, resizing, augmentation,
and the synthetic motion-direction dataset generator."""

from .augment import augment
from .ppm import PpmError, read_ppm, write_ppm
from .snippets import BoundingBox, Snippet, SnippetError, load_snippet, write_snippet
from .synth import CLASS_NAMES, SynthError, SynthSpec, render_snippet, synth_generate
from .transforms import (
    denormalize_values,
    normalize_frame,
    normalize_values,
    resize_bilinear,
)

__all__ = [
    "BoundingBox",
    "CLASS_NAMES",
    "PpmError",
    "Snippet",
    "SnippetError",
    "SynthError",
    "SynthSpec",
    "augment",
    "denormalize_values",
    "load_snippet",
    "normalize_frame",
    "normalize_values",
    "read_ppm",
    "render_snippet",
    "resize_bilinear",
    "synth_generate",
    "write_ppm",
    "write_snippet",
]
