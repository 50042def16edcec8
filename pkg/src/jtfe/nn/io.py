"""Model file format.

Layout (little-endian):

    magic "JTFM" | u32 version | u32 task-tag length | task tag (utf-8)
    u32 metadata length | metadata JSON (utf-8)
    u32 section count
    per section: u32 name length | name | u32 ndim | u32 dims... | float32 data

Metadata carries everything needed to rebuild the model: feature fields,
vocabularies, dims, label names or the candidate inventory, and provider
configuration.  Loading a saved model reproduces its predictions exactly.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Any, Dict, Tuple

import numpy as np

from ..errors import Corrupt, VersionMismatch

MAGIC = b"JTFM"
VERSION = 1


def _write_u32(fh, value: int) -> None:
    fh.write(struct.pack("<I", value))


def _write_str(fh, s: str) -> None:
    raw = s.encode("utf-8")
    _write_u32(fh, len(raw))
    fh.write(raw)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise Corrupt("model file truncated")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def string(self) -> str:
        return self.take(self.u32()).decode("utf-8")


def save_model_file(
    path: str | Path,
    task: str,
    meta: Dict[str, Any],
    params: Dict[str, np.ndarray],
) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        _write_u32(fh, VERSION)
        _write_str(fh, task)
        _write_str(fh, json.dumps(meta, ensure_ascii=False, sort_keys=True))
        _write_u32(fh, len(params))
        for name, arr in params.items():
            _write_str(fh, name)
            _write_u32(fh, arr.ndim)
            for d in arr.shape:
                _write_u32(fh, d)
            fh.write(np.ascontiguousarray(arr, dtype=np.float32).tobytes())


def load_model_file(
    path: str | Path,
) -> Tuple[str, Dict[str, Any], Dict[str, np.ndarray]]:
    data = Path(path).read_bytes()
    r = _Reader(data)
    if r.take(4) != MAGIC:
        raise Corrupt(f"{path}: bad magic")
    version = r.u32()
    if version != VERSION:
        raise VersionMismatch(f"{path}: version {version}, expected {VERSION}")
    task = r.string()
    try:
        meta = json.loads(r.string())
    except json.JSONDecodeError as exc:
        raise Corrupt(f"{path}: bad metadata: {exc}") from None
    params: Dict[str, np.ndarray] = {}
    n_sections = r.u32()
    for _ in range(n_sections):
        name = r.string()
        ndim = r.u32()
        shape = tuple(r.u32() for _ in range(ndim))
        count = int(np.prod(shape)) if shape else 1
        raw = r.take(4 * count)
        params[name] = np.frombuffer(raw, dtype="<f4").reshape(shape).copy()
    if r.pos != len(data):
        raise Corrupt(f"{path}: {len(data) - r.pos} trailing bytes")
    return task, meta, params
