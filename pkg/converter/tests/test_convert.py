import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

torch = pytest.importorskip("torch")

from otwa_converter.convert import ConversionError, convert, discover_conv_keys, main
from otwa_converter.vgg_map import (
    ENCODER_CONVS,
    TORCHVISION_FEATURE_INDICES,
    TORCHVISION_RGB_MEANS,
    TORCHVISION_RGB_STDS,
    decoder_channel_plan,
)


def make_encoder_checkpoint(path: Path, seed: int = 0) -> dict:
    """Synthetic torchvision-style VGG-19 state dict (features.* keys)."""
    gen = torch.Generator().manual_seed(seed)
    state = {}
    for i, (name, cin, cout) in enumerate(ENCODER_CONVS):
        idx = TORCHVISION_FEATURE_INDICES[i]
        scale = (2.0 / (cin * 9)) ** 0.5
        state[f"features.{idx}.weight"] = torch.randn(cout, cin, 3, 3, generator=gen) * scale
        state[f"features.{idx}.bias"] = torch.zeros(cout)
    # Classifier junk the converter must ignore.
    state["classifier.0.weight"] = torch.zeros(10, 25088)
    torch.save(state, path)
    return state


def make_decoder_checkpoint(path: Path, layer: int, seed: int = 0) -> dict:
    gen = torch.Generator().manual_seed(seed * 10 + layer)
    state = {}
    for i, (cin, cout) in enumerate(decoder_channel_plan(layer)):
        scale = (2.0 / (cin * 9)) ** 0.5
        state[f"model.{2 * i}.weight"] = torch.randn(cout, cin, 3, 3, generator=gen) * scale
        state[f"model.{2 * i}.bias"] = torch.zeros(cout)
    torch.save(state, path)
    return state


@pytest.fixture(scope="module")
def checkpoints(tmp_path_factory):
    root = tmp_path_factory.mktemp("ckpts")
    enc = root / "vgg19.pth"
    make_encoder_checkpoint(enc)
    decs = {}
    for layer in range(1, 6):
        p = root / f"decoder{layer}.pth"
        make_decoder_checkpoint(p, layer)
        decs[layer] = p
    return enc, decs


def test_convert_produces_engine_loadable_archive(checkpoints, tmp_path):
    enc, decs = checkpoints
    out = tmp_path / "weights.otwa"
    summary = convert(enc, decs, out, preprocess="none")
    assert out.exists()
    assert summary["bytes"] == out.stat().st_size
    # The engine is the authority on the format: it must load the archive,
    # validate the manifest and build a working codec.
    otsynth_codec = pytest.importorskip("otsynth.codec")
    archive = otsynth_codec.load_archive(out.read_bytes())
    codec = otsynth_codec.VggCodec(archive)
    img = np.random.default_rng(0).random((32, 32, 3)).astype(np.float32)
    feat = codec.encode(img, 3)
    assert feat.shape == (8, 8, 256)
    assert np.all(np.isfinite(codec.decode(feat, 3)))


def test_conversion_is_deterministic(checkpoints, tmp_path):
    enc, decs = checkpoints
    out1 = tmp_path / "a.otwa"
    out2 = tmp_path / "b.otwa"
    convert(enc, decs, out1, preprocess="torchvision")
    convert(enc, decs, out2, preprocess="torchvision")
    assert out1.read_bytes() == out2.read_bytes()


def test_values_preserved_bit_for_bit(checkpoints, tmp_path):
    enc, decs = checkpoints
    out = tmp_path / "weights.otwa"
    convert(enc, decs, out, preprocess="none")
    otsynth_codec = pytest.importorskip("otsynth.codec")
    archive = otsynth_codec.load_archive(out.read_bytes())
    src = torch.load(enc, map_location="cpu", weights_only=True)
    for i, (name, _, _) in enumerate(ENCODER_CONVS):
        idx = TORCHVISION_FEATURE_INDICES[i]
        expected = src[f"features.{idx}.weight"].numpy().astype(np.float32)
        got = archive.tensors[f"encoder.{name}.weight"]
        assert np.array_equal(got, expected)


def test_axis_permutation_spot_checks(tmp_path):
    # TF-layout checkpoint: (kh, kw, in, out) must land as (out, in, kh, kw)
    # with element equality at hand-picked indices.
    gen = torch.Generator().manual_seed(7)
    enc_state = {}
    for i, (name, cin, cout) in enumerate(ENCODER_CONVS):
        idx = TORCHVISION_FEATURE_INDICES[i]
        enc_state[f"features.{idx}.weight"] = torch.randn(3, 3, cin, cout, generator=gen)
        enc_state[f"features.{idx}.bias"] = torch.zeros(cout)
    enc = tmp_path / "enc_hwio.pth"
    torch.save(enc_state, enc)
    decs = {}
    for layer in range(1, 6):
        state = {}
        for i, (cin, cout) in enumerate(decoder_channel_plan(layer)):
            state[f"model.{i}.weight"] = torch.randn(3, 3, cin, cout, generator=gen)
            state[f"model.{i}.bias"] = torch.zeros(cout)
        p = tmp_path / f"dec{layer}_hwio.pth"
        torch.save(state, p)
        decs[layer] = p
    out = tmp_path / "weights.otwa"
    convert(enc, decs, out, preprocess="none", layout="hwio")
    otsynth_codec = pytest.importorskip("otsynth.codec")
    archive = otsynth_codec.load_archive(out.read_bytes())
    raw = enc_state["features.0.weight"].numpy()
    converted = archive.tensors["encoder.conv1_1.weight"]
    for (kh, kw, ci, co) in [(0, 2, 1, 33), (1, 1, 2, 0), (2, 0, 0, 63)]:
        assert converted[co, ci, kh, kw] == np.float32(raw[kh, kw, ci, co])


def test_missing_tensor_reports_gap(checkpoints, tmp_path):
    enc, decs = checkpoints
    state = torch.load(enc, map_location="cpu", weights_only=True)
    del state["features.10.weight"]
    broken = tmp_path / "broken.pth"
    torch.save(state, broken)
    with pytest.raises(ConversionError, match="features.10.weight"):
        convert(broken, decs, tmp_path / "w.otwa", preprocess="none")


def test_shape_mismatch_reports_both_shapes(checkpoints, tmp_path):
    enc, decs = checkpoints
    state = torch.load(enc, map_location="cpu", weights_only=True)
    state["features.0.weight"] = torch.zeros(64, 4, 3, 3)
    broken = tmp_path / "badshape.pth"
    torch.save(state, broken)
    with pytest.raises(ConversionError, match=r"\(64, 4, 3, 3\).*\(64, 3, 3, 3\)"):
        convert(broken, decs, tmp_path / "w.otwa", preprocess="none")


def test_torchvision_preprocessing_fold_equivalence(checkpoints, tmp_path):
    # Engine encode on the converted archive must equal the torch forward
    # pass with the checkpoint's own normalize convention.
    enc, decs = checkpoints
    out = tmp_path / "weights.otwa"
    convert(enc, decs, out, preprocess="torchvision")
    otsynth_codec = pytest.importorskip("otsynth.codec")
    archive = otsynth_codec.load_archive(out.read_bytes())
    assert archive.metadata["preprocess"]["rgb_means"] == pytest.approx(TORCHVISION_RGB_MEANS)
    codec = otsynth_codec.VggCodec(archive)
    rng = np.random.default_rng(1)
    img = rng.random((24, 24, 3)).astype(np.float32)
    ours = codec.encode(img, 1)

    import torch.nn.functional as F

    src = torch.load(enc, map_location="cpu", weights_only=True)
    mean = torch.tensor(TORCHVISION_RGB_MEANS).view(3, 1, 1)
    std = torch.tensor(TORCHVISION_RGB_STDS).view(3, 1, 1)
    x = (torch.from_numpy(img.transpose(2, 0, 1)) - mean) / std
    x = F.pad(x[None], (1, 1, 1, 1), mode="reflect")
    ref = F.relu(F.conv2d(x, src["features.0.weight"], src["features.0.bias"]))[0]
    assert np.abs(ours - ref.numpy().transpose(1, 2, 0)).max() <= 1e-4


def test_caffe_preprocessing_fold_equivalence(tmp_path):
    # A caffe-convention checkpoint sees BGR*255 minus channel means; the
    # folded archive must reproduce its activations from [0,1] RGB input.
    import torch.nn.functional as F

    gen = torch.Generator().manual_seed(3)
    enc_state = {}
    for i, (name, cin, cout) in enumerate(ENCODER_CONVS):
        idx = TORCHVISION_FEATURE_INDICES[i]
        scale = (2.0 / (cin * 9)) ** 0.5 / 255.0 if i == 0 else (2.0 / (cin * 9)) ** 0.5
        enc_state[f"features.{idx}.weight"] = torch.randn(cout, cin, 3, 3, generator=gen) * scale
        enc_state[f"features.{idx}.bias"] = torch.zeros(cout)
    enc = tmp_path / "enc_caffe.pth"
    torch.save(enc_state, enc)
    decs = {}
    for layer in range(1, 6):
        state = {}
        for i, (cin, cout) in enumerate(decoder_channel_plan(layer)):
            state[f"model.{i}.weight"] = torch.randn(cout, cin, 3, 3, generator=gen) * 0.01
            state[f"model.{i}.bias"] = torch.zeros(cout)
        p = tmp_path / f"dec{layer}_caffe.pth"
        torch.save(state, p)
        decs[layer] = p
    out = tmp_path / "weights.otwa"
    convert(enc, decs, out, preprocess="caffe")

    otsynth_codec = pytest.importorskip("otsynth.codec")
    archive = otsynth_codec.load_archive(out.read_bytes())
    codec = otsynth_codec.VggCodec(archive)
    rng = np.random.default_rng(2)
    img = rng.random((16, 16, 3)).astype(np.float32)
    ours = codec.encode(img, 1)

    from otwa_converter.vgg_map import CAFFE_BGR_MEANS_255

    bgr255 = torch.from_numpy(img[:, :, ::-1].transpose(2, 0, 1).copy()) * 255.0
    mean = torch.tensor(CAFFE_BGR_MEANS_255).view(3, 1, 1)
    x = F.pad((bgr255 - mean)[None], (1, 1, 1, 1), mode="reflect")
    ref = F.relu(F.conv2d(x, enc_state["features.0.weight"], enc_state["features.0.bias"]))[0]
    assert np.abs(ours - ref.numpy().transpose(1, 2, 0)).max() <= 1e-3


def test_cli_prints_checksum_summary(checkpoints, tmp_path, capsys):
    enc, decs = checkpoints
    out = tmp_path / "weights.otwa"
    rc = main(
        [
            "--encoder",
            str(enc),
            *[arg for layer in range(1, 6) for arg in (f"--decoder{layer}", str(decs[layer]))],
            "--out",
            str(out),
            "--preprocess",
            "none",
        ]
    )
    assert rc == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["tensors"]["encoder.conv1_1.weight"]["shape"] == [64, 3, 3, 3]
    assert len(summary["tensors"]["encoder.conv1_1.weight"]["sha256"]) == 64


def test_discover_conv_keys_natural_order():
    state = {
        "model.10.weight": np.zeros((4, 4, 3, 3)),
        "model.2.weight": np.zeros((4, 4, 3, 3)),
        "model.2.bias": np.zeros(4),
        "running_stat": np.zeros(3),
    }
    assert discover_conv_keys(state) == ["model.2", "model.10"]
