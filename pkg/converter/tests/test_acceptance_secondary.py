"""Secondary acceptance: the converted archive drives the engine end to end.

The PSNR gate needs published reference weights; run it by pointing
OTSYNTH_WEIGHTS at a converted archive of those.  The structural checks and
the style-transfer smoke run work with any converted archive.
"""

import os
from pathlib import Path

import numpy as np
import pytest

torch = pytest.importorskip("torch")
otsynth = pytest.importorskip("otsynth")

from otsynth.codec import VggCodec, load_archive
from otsynth.pipeline import SynthesisConfig, synthesize

from otwa_converter.convert import convert
from test_convert import make_decoder_checkpoint, make_encoder_checkpoint


@pytest.fixture(scope="module")
def converted_archive(tmp_path_factory):
    root = tmp_path_factory.mktemp("smoke_ckpts")
    enc = root / "vgg19.pth"
    make_encoder_checkpoint(enc, seed=5)
    decs = {}
    for layer in range(1, 6):
        p = root / f"decoder{layer}.pth"
        make_decoder_checkpoint(p, layer, seed=5)
        decs[layer] = p
    out = root / "weights.otwa"
    convert(enc, decs, out, preprocess="torchvision")
    return out


def _texture(seed: int, size: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    img = rng.random((size, size, 3)).astype(np.float32)
    for _ in range(3):
        img = (img + np.roll(img, 1, 0) + np.roll(img, 1, 1)) / 3.0
    return ((img - img.min()) / (img.max() - img.min())).astype(np.float32)


def test_converted_archive_passes_manifest_and_codec(converted_archive):
    archive = load_archive(Path(converted_archive).read_bytes())
    assert set(archive.metadata["layers"]) == {"1", "2", "3", "4", "5"}
    VggCodec(archive)


@pytest.mark.slow
def test_style_transfer_smoke_512(converted_archive):
    archive = load_archive(Path(converted_archive).read_bytes())
    codec = VggCodec(archive)
    style = _texture(1, 512)
    content = _texture(2, 512)
    cfg = SynthesisConfig(
        mode="style",
        output_width=512,
        output_height=512,
        global_passes=1,
        content_strength=0.5,
        seed=3,
        codec="vgg",
    )
    out = synthesize(style, content, cfg, codec)
    assert out.shape == (512, 512, 3)
    assert np.all(np.isfinite(out))
    print("[PASS] style-transfer smoke 512x512 — finite output with converted archive", flush=True)


@pytest.mark.skipif(
    not (os.environ.get("OTSYNTH_WEIGHTS") and Path(os.environ.get("OTSYNTH_WEIGHTS", "")).is_file()),
    reason="reference weight archive not available (set OTSYNTH_WEIGHTS)",
)
def test_reference_weights_psnr_gate():
    archive = load_archive(Path(os.environ["OTSYNTH_WEIGHTS"]).read_bytes())
    codec = VggCodec(archive)
    worst = np.inf
    for seed in range(5):
        img = _texture(10 + seed, 128)
        for layer in (1, 2, 3):
            recon = codec.decode(codec.encode(img, layer), layer)
            mse = float(np.mean((recon - img) ** 2))
            worst = min(worst, 10.0 * np.log10(1.0 / max(mse, 1e-12)))
    assert worst >= 25.0, f"min PSNR {worst:.1f} dB"
