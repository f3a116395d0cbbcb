"""OTWA archive writer.

Format (little-endian, no padding): magic ``OTWA``, u32 version (1),
u32 metadata length + UTF-8 JSON metadata, u32 tensor count, then per
tensor a u16-length-prefixed UTF-8 name, u8 ndim, u32 dims and raw f32
data.  This module owns the writing side only; the synthesis engine owns
the reading side.
"""

from __future__ import annotations

import io
import json
import struct

import numpy as np

MAGIC = b"OTWA"
VERSION = 1


def write_archive(metadata: dict, tensors: dict[str, np.ndarray]) -> bytes:
    """Serialize named float32 tensors plus JSON metadata to OTWA bytes.

    Metadata is canonicalized (sorted keys) so conversion output is
    byte-for-byte reproducible.
    """
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<I", VERSION))
    meta_raw = json.dumps(metadata, sort_keys=True).encode("utf-8")
    buf.write(struct.pack("<I", len(meta_raw)))
    buf.write(meta_raw)
    buf.write(struct.pack("<I", len(tensors)))
    for name, tensor in tensors.items():
        arr = np.ascontiguousarray(tensor, dtype="<f4")
        encoded = name.encode("utf-8")
        buf.write(struct.pack("<H", len(encoded)))
        buf.write(encoded)
        buf.write(struct.pack("<B", arr.ndim))
        buf.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        buf.write(arr.tobytes())
    return buf.getvalue()
