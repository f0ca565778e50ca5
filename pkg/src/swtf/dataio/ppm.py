"""Binary PPM (P6) reader/writer.

P6 is the one frame format the toolkit speaks: codec-free, bit-exact, and
trivially parseable. Header layout on write is always ``P6\\n<w> <h>\\n255\\n``;
the reader accepts any whitespace/comment layout the PPM spec allows.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np


class PpmError(ValueError):
    """Malformed or unsupported PPM data."""


def _read_token(f: io.BufferedReader) -> bytes:
    """Read one whitespace-delimited header token, skipping '#' comments."""
    tok = b""
    while True:
        ch = f.read(1)
        if ch == b"":
            raise PpmError("truncated PPM header")
        if ch == b"#":
            while ch not in (b"\n", b"\r", b""):
                ch = f.read(1)
            continue
        if ch.isspace():
            if tok:
                return tok
            continue
        tok += ch


def read_ppm(path: str | Path) -> np.ndarray:
    """Decode a binary PPM file into an (H, W, 3) uint8 array.

    Raises PpmError on a bad magic number, maxval != 255, or truncated payload.
    """
    with open(path, "rb") as f:
        magic = f.read(2)
        if magic != b"P6":
            raise PpmError(f"{path}: bad magic {magic!r}, expected P6")
        try:
            width = int(_read_token(f))
            height = int(_read_token(f))
            maxval = int(_read_token(f))
        except ValueError as exc:
            raise PpmError(f"{path}: malformed PPM header") from exc
        if width < 1 or height < 1:
            raise PpmError(f"{path}: invalid dimensions {width}x{height}")
        if maxval != 255:
            raise PpmError(f"{path}: maxval {maxval} unsupported, expected 255")
        payload = f.read(3 * width * height)
        if len(payload) != 3 * width * height:
            raise PpmError(f"{path}: truncated pixel payload")
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3)


def write_ppm(path: str | Path, pixels: np.ndarray) -> None:
    """Write an (H, W, 3) uint8 array as binary PPM."""
    pixels = np.asarray(pixels)
    if pixels.ndim != 3 or pixels.shape[2] != 3:
        raise PpmError(f"expected (H, W, 3) pixel array, got shape {pixels.shape}")
    if pixels.dtype != np.uint8:
        raise PpmError(f"expected uint8 pixels, got {pixels.dtype}")
    height, width = pixels.shape[:2]
    with open(path, "wb") as f:
        f.write(b"P6\n%d %d\n255\n" % (width, height))
        f.write(np.ascontiguousarray(pixels).tobytes())
