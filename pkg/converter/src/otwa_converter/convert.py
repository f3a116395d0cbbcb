"""Convert pretrained VGG-19 encoder/decoder checkpoints to an OTWA archive.

The engine consumes mean-centered RGB in [0, 1] and adds the archive's
channel means back after decoding.  Whatever preprocessing the source
checkpoints were trained with is folded into the first encoder convolution
and the final decoder convolutions here, so the archive is self-contained.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import re
import sys
from pathlib import Path

import numpy as np

from .otwa import write_archive
from .vgg_map import (
    CAFFE_BGR_MEANS_255,
    TORCHVISION_RGB_MEANS,
    TORCHVISION_RGB_STDS,
    TensorSpec,
    decoder_channel_plan,
    decoder_conv_specs,
    encoder_conv_specs,
    layer_manifest,
)


class ConversionError(RuntimeError):
    pass


def _load_state_dict(path: Path) -> dict:
    import torch

    obj = torch.load(path, map_location="cpu", weights_only=True)
    if hasattr(obj, "state_dict"):
        obj = obj.state_dict()
    if not isinstance(obj, dict):
        raise ConversionError(f"{path} does not contain a state dict")
    return {k: np.asarray(v.detach().cpu().numpy()) for k, v in obj.items() if hasattr(v, "detach")}


def _natural_key(key: str):
    return [int(p) if p.isdigit() else p for p in re.split(r"(\d+)", key)]


def discover_conv_keys(state: dict) -> list[str]:
    """Conv parameter prefixes (entries with 4-d weights) in network order."""
    keys = []
    for k, v in state.items():
        if k.endswith(".weight") and v.ndim == 4:
            keys.append(k[: -len(".weight")])
    return sorted(keys, key=_natural_key)


def apply_specs(state: dict, specs: list[TensorSpec], source: str) -> dict[str, np.ndarray]:
    out = {}
    missing = [spec.source_key for spec in specs if spec.source_key not in state]
    if missing:
        raise ConversionError(f"{source}: missing tensors {missing}")
    for spec in specs:
        raw = state[spec.source_key]
        if tuple(raw.shape) != spec.expected_shape:
            raise ConversionError(
                f"{source}: {spec.source_key} has shape {tuple(raw.shape)}, "
                f"expected {spec.expected_shape}"
            )
        arr = np.transpose(raw, spec.permutation) if raw.ndim == 4 else raw
        out[spec.target_name] = np.ascontiguousarray(arr, dtype=np.float32)
    return out


def _fold_torchvision(tensors: dict[str, np.ndarray]) -> list[float]:
    """Fold the normalize-std division into conv1_1 and the decoder outputs."""
    stds = np.asarray(TORCHVISION_RGB_STDS, dtype=np.float32)
    w = tensors["encoder.conv1_1.weight"]
    tensors["encoder.conv1_1.weight"] = (w / stds[None, :, None, None]).astype(np.float32)
    for layer in range(1, 6):
        idx = len(decoder_channel_plan(layer)) - 1
        wname = f"decoder{layer}.conv{idx}.weight"
        bname = f"decoder{layer}.conv{idx}.bias"
        tensors[wname] = (tensors[wname] * stds[:, None, None, None]).astype(np.float32)
        tensors[bname] = (tensors[bname] * stds).astype(np.float32)
    return list(TORCHVISION_RGB_MEANS)


def _fold_caffe(tensors: dict[str, np.ndarray]) -> list[float]:
    """Fold BGR ordering and the 0..255 scale into the edge convolutions."""
    w = tensors["encoder.conv1_1.weight"]
    # Checkpoint expects BGR*255 input; the engine supplies centered RGB in
    # [0, 1]: permute the in-channels and absorb the scale.
    w = w[:, ::-1, :, :] * np.float32(255.0)
    tensors["encoder.conv1_1.weight"] = np.ascontiguousarray(w, dtype=np.float32)
    for layer in range(1, 6):
        idx = len(decoder_channel_plan(layer)) - 1
        wname = f"decoder{layer}.conv{idx}.weight"
        bname = f"decoder{layer}.conv{idx}.bias"
        tensors[wname] = np.ascontiguousarray(
            tensors[wname][::-1, :, :, :] / np.float32(255.0), dtype=np.float32
        )
        tensors[bname] = np.ascontiguousarray(
            tensors[bname][::-1] / np.float32(255.0), dtype=np.float32
        )
    means255 = np.asarray(CAFFE_BGR_MEANS_255[::-1], dtype=np.float64)  # to RGB order
    return [float(m) for m in means255 / 255.0]


def convert(
    encoder_path,
    decoder_paths: dict[int, Path],
    out_path,
    preprocess: str = "torchvision",
    layout: str = "oihw",
    encoder_naming: str | None = None,
) -> dict:
    """Read checkpoints, emit the OTWA archive, return the summary dict."""
    encoder_path = Path(encoder_path)
    enc_state = _load_state_dict(encoder_path)
    if encoder_naming is None:
        encoder_naming = "torchvision" if any(k.startswith("features.") for k in enc_state) else "plain"
    tensors = apply_specs(enc_state, encoder_conv_specs(layout, encoder_naming), str(encoder_path))
    for layer in range(1, 6):
        path = Path(decoder_paths[layer])
        state = _load_state_dict(path)
        keys = discover_conv_keys(state)
        tensors.update(apply_specs(state, decoder_conv_specs(layer, keys, layout), str(path)))

    if preprocess == "torchvision":
        means = _fold_torchvision(tensors)
    elif preprocess == "caffe":
        means = _fold_caffe(tensors)
    elif preprocess == "none":
        means = [0.0, 0.0, 0.0]
    else:
        raise ConversionError(f"unknown preprocess convention {preprocess!r}")

    metadata = {
        "preprocess": {"rgb_means": means, "convention": preprocess},
        "layers": layer_manifest(),
    }
    blob = write_archive(metadata, tensors)
    Path(out_path).write_bytes(blob)
    summary = {
        "output": str(out_path),
        "bytes": len(blob),
        "preprocess": preprocess,
        "tensors": {
            name: {
                "shape": list(t.shape),
                "sha256": hashlib.sha256(np.ascontiguousarray(t, dtype="<f4").tobytes()).hexdigest(),
            }
            for name, t in tensors.items()
        },
    }
    return summary


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--encoder", required=True, help="VGG-19 encoder checkpoint (.pth)")
    for layer in range(1, 6):
        parser.add_argument(f"--decoder{layer}", required=True, help=f"decoder checkpoint for layer {layer}")
    parser.add_argument("--out", required=True, help="output OTWA path")
    parser.add_argument("--preprocess", default="torchvision", choices=["torchvision", "caffe", "none"])
    parser.add_argument("--layout", default="oihw", choices=["oihw", "hwio"], help="weight axis order in the checkpoints")
    args = parser.parse_args(argv)
    try:
        summary = convert(
            args.encoder,
            {layer: getattr(args, f"decoder{layer}") for layer in range(1, 6)},
            args.out,
            preprocess=args.preprocess,
            layout=args.layout,
        )
    except (ConversionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    json.dump(summary, sys.stdout, indent=2, sort_keys=True)
    print()
    return 0


if __name__ == "__main__":
    sys.exit(main())
