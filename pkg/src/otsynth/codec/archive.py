"""OTWA weight archive: the binary container for codec network weights.

Layout (little-endian, no alignment padding):

    magic   4 bytes  b"OTWA"
    version u32      currently 1
    mlen    u32      metadata byte length
    meta    mlen bytes of UTF-8 JSON (layer manifest, preprocessing means)
    count   u32      tensor count
    per tensor:
        nlen  u16    name byte length
        name  nlen bytes UTF-8
        ndim  u8
        dims  ndim x u32
        data  prod(dims) x f32 raw

The metadata's ``layers`` object maps each target layer ("1".."5") to the
encoder and decoder tensor names it requires; when present it is validated
against the stored tensors at load time.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from ..errors import ArchiveFormatError, IncompleteArchiveError, TruncatedArchiveError

MAGIC = b"OTWA"
VERSION = 1


@dataclass
class WeightArchive:
    """Named float32 tensor store plus its JSON metadata."""

    metadata: dict
    tensors: dict[str, np.ndarray]
    # Raw metadata bytes as loaded, preserved so save(load(b)) == b.
    metadata_raw: bytes | None = field(default=None, repr=False)

    def require(self, names) -> None:
        missing = [n for n in names if n not in self.tensors]
        if missing:
            raise IncompleteArchiveError(f"archive is missing tensors: {missing}")


def _read_exact(buf: io.BytesIO, n: int, what: str) -> bytes:
    data = buf.read(n)
    if len(data) != n:
        raise TruncatedArchiveError(f"archive ended while reading {what}")
    return data


def load_archive(data: bytes) -> WeightArchive:
    """Parse OTWA bytes into a resident archive, validating the manifest."""
    buf = io.BytesIO(data)
    magic = buf.read(4)
    if magic != MAGIC:
        raise ArchiveFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    (version,) = struct.unpack("<I", _read_exact(buf, 4, "version"))
    if version != VERSION:
        raise ArchiveFormatError(f"unsupported archive version {version}")
    (mlen,) = struct.unpack("<I", _read_exact(buf, 4, "metadata length"))
    meta_raw = _read_exact(buf, mlen, "metadata")
    try:
        metadata = json.loads(meta_raw.decode("utf-8")) if mlen else {}
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ArchiveFormatError(f"metadata is not valid JSON: {exc}") from exc
    (count,) = struct.unpack("<I", _read_exact(buf, 4, "tensor count"))
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        (nlen,) = struct.unpack("<H", _read_exact(buf, 2, "name length"))
        name = _read_exact(buf, nlen, "tensor name").decode("utf-8")
        if name in tensors:
            raise ArchiveFormatError(f"duplicate tensor name {name!r}")
        (ndim,) = struct.unpack("<B", _read_exact(buf, 1, "ndim"))
        dims = struct.unpack(f"<{ndim}I", _read_exact(buf, 4 * ndim, "dims"))
        size = int(np.prod(dims, dtype=np.int64)) if ndim else 1
        raw = _read_exact(buf, 4 * size, f"data of {name!r}")
        tensors[name] = np.frombuffer(raw, dtype="<f4").reshape(dims).astype(np.float32)
    archive = WeightArchive(metadata=metadata, tensors=tensors, metadata_raw=meta_raw)
    _validate_manifest(archive)
    return archive


def save_archive(archive: WeightArchive) -> bytes:
    """Serialize an archive to OTWA bytes; inverse of :func:`load_archive`."""
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<I", VERSION))
    meta_raw = archive.metadata_raw
    if meta_raw is None:
        meta_raw = json.dumps(archive.metadata, sort_keys=True).encode("utf-8")
    buf.write(struct.pack("<I", len(meta_raw)))
    buf.write(meta_raw)
    buf.write(struct.pack("<I", len(archive.tensors)))
    for name, tensor in archive.tensors.items():
        encoded = name.encode("utf-8")
        buf.write(struct.pack("<H", len(encoded)))
        buf.write(encoded)
        buf.write(struct.pack("<B", tensor.ndim))
        buf.write(struct.pack(f"<{tensor.ndim}I", *tensor.shape))
        buf.write(np.ascontiguousarray(tensor, dtype="<f4").tobytes())
    return buf.getvalue()


def _validate_manifest(archive: WeightArchive) -> None:
    layers = archive.metadata.get("layers")
    if layers is None:
        return
    for layer_key, entry in layers.items():
        for side in ("encoder", "decoder"):
            names = entry.get(side)
            if names is None:
                raise IncompleteArchiveError(f"layer {layer_key} manifest lacks {side} names")
            missing = [n for n in names if n not in archive.tensors]
            if missing:
                raise IncompleteArchiveError(f"layer {layer_key} {side} tensors missing: {missing}")
