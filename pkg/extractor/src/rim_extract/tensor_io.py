"""Producer side of the ``.rimt`` tensor file format.

The classifier package documents and reads this format; the extractor
writes it without importing the classifier, so it can run in the
feature-extraction environment alone. Layout: magic ``RIMT``, u16
version (1), u8 dtype code (1 = float32 LE), u8 ndim, ndim x u32 shape,
then the row-major payload.

All writes go through a temp file in the target directory followed by
an atomic rename, so an interrupted export never leaves a half-written
artifact under its final name.
"""

from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np

MAGIC = b"RIMT"
VERSION = 1
DTYPE_FLOAT32 = 1


class ExportError(Exception):
    """Raised when an export cannot produce a valid artifact."""


def encode_tensor(array) -> bytes:
    """Serialize an array as header plus float32 LE payload.

    Rejects empty shapes and non-finite values up front; the consumer
    would refuse the file anyway, and failing here keeps the bad data
    out of the output directory entirely.
    """
    a = np.ascontiguousarray(array, dtype="<f4")
    if a.ndim < 1 or any(s <= 0 for s in a.shape):
        raise ExportError(f"cannot serialize an array of shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ExportError("tensor payload contains NaN or Inf values")
    header = struct.pack("<4sHBB", MAGIC, VERSION, DTYPE_FLOAT32, a.ndim)
    header += struct.pack(f"<{a.ndim}I", *a.shape)
    return header + a.tobytes()


def atomic_write_bytes(path, blob: bytes) -> None:
    """Write ``blob`` to ``path`` via temp file + rename."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(blob)
    os.replace(tmp, path)


def write_tensor(array, path) -> None:
    """Atomically write one tensor file."""
    atomic_write_bytes(path, encode_tensor(array))
