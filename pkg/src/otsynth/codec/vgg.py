"""VGG-19 auto-encoder codec driven by an OTWA weight archive.

The encoder is the VGG-19 prefix up to the first convolution of the target
block; the decoder mirrors that prefix (convolutions with swapped channel
counts, poolings replaced by nearest-neighbor upsampling), ending in a
3-channel convolution with no activation.  Inputs are mean-centered RGB;
the channel means come from the archive metadata, so the weight converter
stays authoritative for the preprocessing convention.
"""

from __future__ import annotations

import numpy as np

from ..errors import DimensionError, IncompleteArchiveError, SizeError
from .archive import WeightArchive
from .ops import conv2d, max_pool2, relu, upsample_nn2

# (name, in_channels, out_channels) per block; a 2x2 max-pool sits between
# consecutive blocks.
VGG_BLOCKS = [
    [("conv1_1", 3, 64), ("conv1_2", 64, 64)],
    [("conv2_1", 64, 128), ("conv2_2", 128, 128)],
    [("conv3_1", 128, 256), ("conv3_2", 256, 256), ("conv3_3", 256, 256), ("conv3_4", 256, 256)],
    [("conv4_1", 256, 512), ("conv4_2", 512, 512), ("conv4_3", 512, 512), ("conv4_4", 512, 512)],
    [("conv5_1", 512, 512)],
]

VGG_CHANNELS = {1: 64, 2: 128, 3: 256, 4: 512, 5: 512}

POOL = "pool"
UPSAMPLE = "upsample"


def encoder_plan(layer: int) -> list:
    """Op sequence (conv specs and pools) for the encoder prefix."""
    if not 1 <= layer <= 5:
        raise ValueError(f"layer must be in 1..5, got {layer}")
    plan: list = []
    for b in range(layer - 1):
        plan.extend(VGG_BLOCKS[b])
        plan.append(POOL)
    plan.append(VGG_BLOCKS[layer - 1][0])
    return plan


def decoder_plan(layer: int) -> list:
    """Mirror of :func:`encoder_plan`: reversed, channels swapped, pools upsampled."""
    plan = []
    for op in reversed(encoder_plan(layer)):
        if op == POOL:
            plan.append(UPSAMPLE)
        else:
            name, cin, cout = op
            plan.append((name, cout, cin))
    return plan


def encoder_tensor_names(layer: int) -> list[str]:
    names = []
    for op in encoder_plan(layer):
        if op != POOL:
            names.append(f"encoder.{op[0]}.weight")
            names.append(f"encoder.{op[0]}.bias")
    return names


def decoder_tensor_names(layer: int) -> list[str]:
    names = []
    idx = 0
    for op in decoder_plan(layer):
        if op != UPSAMPLE:
            names.append(f"decoder{layer}.conv{idx}.weight")
            names.append(f"decoder{layer}.conv{idx}.bias")
            idx += 1
    return names


def standard_manifest() -> dict:
    """Layer manifest mapping each target layer to its tensor names."""
    return {
        str(layer): {
            "encoder": encoder_tensor_names(layer),
            "decoder": decoder_tensor_names(layer),
        }
        for layer in range(1, 6)
    }


class VggCodec:
    """Encode images to VGG features and decode them back, per target layer."""

    name = "vgg"

    def __init__(self, archive: WeightArchive, padding: str = "reflect"):
        preprocess = archive.metadata.get("preprocess", {})
        means = preprocess.get("rgb_means")
        if means is None or len(means) != 3:
            raise IncompleteArchiveError("archive metadata lacks preprocess.rgb_means")
        self._means = np.asarray(means, dtype=np.float32)
        self._padding = padding
        self._archive = archive
        for layer in range(1, 6):
            archive.require(encoder_tensor_names(layer))
            archive.require(decoder_tensor_names(layer))
        self._check_shapes()

    def _check_shapes(self) -> None:
        for layer in range(1, 6):
            convs = [op for op in encoder_plan(layer) if op != POOL]
            names = encoder_tensor_names(layer)
            for (name, cin, cout), wname in zip(convs, names[0::2]):
                w = self._archive.tensors[wname]
                if w.shape[:2] != (cout, cin):
                    raise DimensionError(f"{wname} has shape {w.shape}, expected ({cout}, {cin}, k, k)")
            dconvs = [op for op in decoder_plan(layer) if op != UPSAMPLE]
            dnames = decoder_tensor_names(layer)
            for (_, cin, cout), wname in zip(dconvs, dnames[0::2]):
                w = self._archive.tensors[wname]
                if w.shape[:2] != (cout, cin):
                    raise DimensionError(f"{wname} has shape {w.shape}, expected ({cout}, {cin}, k, k)")

    def channels(self, layer: int) -> int:
        return VGG_CHANNELS[layer]

    def downsample_factor(self, layer: int) -> int:
        return 2 ** (layer - 1)

    def encode(self, img: np.ndarray, layer: int) -> np.ndarray:
        factor = self.downsample_factor(layer)
        if img.shape[0] < factor or img.shape[1] < factor:
            raise SizeError(f"image {img.shape[:2]} smaller than downsample factor {factor}")
        x = img.astype(np.float32, copy=False) - self._means
        names = iter(encoder_tensor_names(layer)[0::2])
        for op in encoder_plan(layer):
            if op == POOL:
                x = max_pool2(x)
            else:
                wname = next(names)
                bname = wname.replace(".weight", ".bias")
                x = relu(conv2d(x, self._archive.tensors[wname], self._archive.tensors[bname], self._padding))
        return x

    def decode(self, features: np.ndarray, layer: int) -> np.ndarray:
        if features.shape[2] != self.channels(layer):
            raise DimensionError(
                f"features have {features.shape[2]} channels, layer {layer} expects {self.channels(layer)}"
            )
        x = features.astype(np.float32, copy=False)
        plan = decoder_plan(layer)
        conv_ops = [op for op in plan if op != UPSAMPLE]
        names = iter(decoder_tensor_names(layer)[0::2])
        seen = 0
        for op in plan:
            if op == UPSAMPLE:
                x = upsample_nn2(x)
            else:
                wname = next(names)
                bname = wname.replace(".weight", ".bias")
                x = conv2d(x, self._archive.tensors[wname], self._archive.tensors[bname], self._padding)
                seen += 1
                if seen < len(conv_ops):
                    x = relu(x)
        return x + self._means
