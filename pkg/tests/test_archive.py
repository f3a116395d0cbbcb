import numpy as np
import pytest

from otsynth.codec import WeightArchive, load_archive, save_archive
from otsynth.errors import ArchiveFormatError, IncompleteArchiveError, TruncatedArchiveError


def test_single_tensor_roundtrip_bitwise():
    t = np.array([[1.0, 2.0], [3.0, 4.0]], dtype=np.float32)
    blob = save_archive(WeightArchive(metadata={}, tensors={"t": t}))
    loaded = load_archive(blob)
    assert np.array_equal(loaded.tensors["t"], t)
    assert save_archive(loaded) == blob


def test_save_load_save_is_stable():
    rng = np.random.default_rng(0)
    tensors = {
        "a.weight": rng.standard_normal((4, 3, 3, 3)).astype(np.float32),
        "a.bias": rng.standard_normal(4).astype(np.float32),
    }
    meta = {"preprocess": {"rgb_means": [0.1, 0.2, 0.3]}}
    blob = save_archive(WeightArchive(metadata=meta, tensors=tensors))
    assert save_archive(load_archive(blob)) == blob
    reloaded = load_archive(blob)
    assert reloaded.metadata == meta


def test_bad_magic():
    blob = save_archive(WeightArchive(metadata={}, tensors={}))
    with pytest.raises(ArchiveFormatError):
        load_archive(b"NOPE" + blob[4:])


def test_bad_version():
    blob = bytearray(save_archive(WeightArchive(metadata={}, tensors={})))
    blob[4:8] = (99).to_bytes(4, "little")
    with pytest.raises(ArchiveFormatError):
        load_archive(bytes(blob))


def test_truncated_tensor_data():
    t = np.arange(9, dtype=np.float32).reshape(3, 3)
    blob = save_archive(WeightArchive(metadata={}, tensors={"t": t}))
    with pytest.raises(TruncatedArchiveError):
        load_archive(blob[:-4])  # one float short of the declared 3x3


def test_manifest_validation():
    t = np.zeros((2, 2), dtype=np.float32)
    meta = {"layers": {"1": {"encoder": ["enc.w"], "decoder": ["dec.w"]}}}
    good = save_archive(WeightArchive(metadata=meta, tensors={"enc.w": t, "dec.w": t}))
    load_archive(good)  # no error
    bad = save_archive(WeightArchive(metadata=meta, tensors={"enc.w": t}))
    with pytest.raises(IncompleteArchiveError):
        load_archive(bad)


def test_metadata_must_be_json():
    blob = bytearray(save_archive(WeightArchive(metadata={"k": 1}, tensors={})))
    # Corrupt one metadata byte.
    blob[12] = 0xFF
    with pytest.raises(ArchiveFormatError):
        load_archive(bytes(blob))
