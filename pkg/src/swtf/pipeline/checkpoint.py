"""Binary checkpoint format.

Layout, all integers little-endian:

    magic "SWTF" | version u32 | array count u32
    per array (sorted by name):
        name length u16 | name UTF-8
        dtype code u8 (1 = float32, 2 = float64)
        ndim u8 | dims u32 each
        raw little-endian values
    config length u32 | config JSON UTF-8

Writes go through a temp file + rename so a crash never leaves a corrupt
checkpoint at the target path.
"""

from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np

MAGIC = b"SWTF"
VERSION = 1

_DTYPE_CODES = {1: np.dtype("<f4"), 2: np.dtype("<f8")}
_CODE_FOR_KIND = {np.dtype(np.float32): 1, np.dtype(np.float64): 2}


class CheckpointError(ValueError):
    """Raised for unreadable or inconsistent checkpoint files."""


def save_arrays(path: str | Path, arrays: dict[str, np.ndarray], config_text: str) -> Path:
    """Write arrays + config snapshot; returns the path."""
    path = Path(path)
    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("<II", VERSION, len(arrays))
    for name in sorted(arrays):
        arr = np.asarray(arrays[name])
        if arr.dtype not in _CODE_FOR_KIND:
            raise CheckpointError(f"{name}: unsupported dtype {arr.dtype}")
        code = _CODE_FOR_KIND[arr.dtype]
        encoded = name.encode("utf-8")
        blob += struct.pack("<H", len(encoded)) + encoded
        blob += struct.pack("<BB", code, arr.ndim)
        blob += struct.pack(f"<{arr.ndim}I", *arr.shape)
        blob += np.ascontiguousarray(arr, dtype=_DTYPE_CODES[code]).tobytes()
    cfg = config_text.encode("utf-8")
    blob += struct.pack("<I", len(cfg)) + cfg

    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(blob)
    os.replace(tmp, path)
    return path


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CheckpointError("truncated file")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_arrays(path: str | Path) -> tuple[dict[str, np.ndarray], str]:
    """Read back (arrays, config JSON text); validates structure fully."""
    r = _Reader(Path(path).read_bytes())
    if r.take(4) != MAGIC:
        raise CheckpointError("bad magic")
    version, count = r.unpack("<II")
    if version != VERSION:
        raise CheckpointError(f"version mismatch: file v{version}, reader v{VERSION}")
    arrays: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = r.unpack("<H")
        name = r.take(name_len).decode("utf-8")
        code, ndim = r.unpack("<BB")
        if code not in _DTYPE_CODES:
            raise CheckpointError(f"{name}: shape/dtype inconsistency (dtype code {code})")
        dims = r.unpack(f"<{ndim}I") if ndim else ()
        n_values = int(np.prod(dims, dtype=np.int64)) if ndim else 1
        dtype = _DTYPE_CODES[code]
        raw = r.take(n_values * dtype.itemsize)
        arr = np.frombuffer(raw, dtype=dtype).reshape(dims)
        if name in arrays:
            raise CheckpointError(f"duplicate array name {name!r}")
        arrays[name] = arr.copy()
    (cfg_len,) = r.unpack("<I")
    config_text = r.take(cfg_len).decode("utf-8")
    if r.pos != len(r.data):
        raise CheckpointError("shape/dtype inconsistency (trailing bytes)")
    return arrays, config_text
