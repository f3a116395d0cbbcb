"""VGG-19 naming and shape knowledge for checkpoint conversion.

All checkpoint-format specifics live here; the synthesis engine only ever
sees the OTWA names this module emits.
"""

from __future__ import annotations

from dataclasses import dataclass

# (name, in_channels, out_channels) per block; 2x2 max-pools sit between
# blocks.  Only the prefix through conv5_1 participates.
VGG_BLOCKS = [
    [("conv1_1", 3, 64), ("conv1_2", 64, 64)],
    [("conv2_1", 64, 128), ("conv2_2", 128, 128)],
    [("conv3_1", 128, 256), ("conv3_2", 256, 256), ("conv3_3", 256, 256), ("conv3_4", 256, 256)],
    [("conv4_1", 256, 512), ("conv4_2", 512, 512), ("conv4_3", 512, 512), ("conv4_4", 512, 512)],
    [("conv5_1", 512, 512)],
]

ENCODER_CONVS = [conv for block in VGG_BLOCKS for conv in block]

# torchvision vgg19().features indices of the conv layers above.
TORCHVISION_FEATURE_INDICES = [0, 2, 5, 7, 10, 12, 14, 16, 19, 21, 23, 25, 28]

# Weight-tensor axis orders we can ingest; OTWA stores (out, in, kh, kw).
LAYOUT_PERMUTATIONS = {
    "oihw": (0, 1, 2, 3),  # PyTorch native
    "hwio": (3, 2, 0, 1),  # TensorFlow native
}

TORCHVISION_RGB_MEANS = [0.485, 0.456, 0.406]
TORCHVISION_RGB_STDS = [0.229, 0.224, 0.225]
# Classic Caffe-convention constants: BGR channel means on a 0..255 scale.
CAFFE_BGR_MEANS_255 = [103.939, 116.779, 123.68]


@dataclass(frozen=True)
class TensorSpec:
    """One conversion-map entry: where a tensor comes from and what it must be."""

    source_key: str
    target_name: str
    expected_shape: tuple
    permutation: tuple


def encoder_conv_specs(layout: str = "oihw", naming: str = "torchvision") -> list[TensorSpec]:
    """Conversion map for the encoder prefix.

    ``naming`` selects the checkpoint key scheme: ``torchvision``
    (features.N.weight) or ``plain`` (conv1_1.weight).
    """
    perm = LAYOUT_PERMUTATIONS[layout]
    specs = []
    for i, (name, cin, cout) in enumerate(ENCODER_CONVS):
        if naming == "torchvision":
            key = f"features.{TORCHVISION_FEATURE_INDICES[i]}"
        elif naming == "plain":
            key = name
        else:
            raise ValueError(f"unknown encoder naming scheme {naming!r}")
        native = (cout, cin, 3, 3)
        stored = tuple(native[perm.index(ax)] for ax in range(4))
        specs.append(
            TensorSpec(
                source_key=f"{key}.weight",
                target_name=f"encoder.{name}.weight",
                expected_shape=stored,
                permutation=perm,
            )
        )
        specs.append(
            TensorSpec(
                source_key=f"{key}.bias",
                target_name=f"encoder.{name}.bias",
                expected_shape=(cout,),
                permutation=(0,),
            )
        )
    return specs


def decoder_channel_plan(layer: int) -> list[tuple[int, int]]:
    """(in, out) channel progression of the mirrored decoder for a layer."""
    prefix = []
    for b in range(layer - 1):
        prefix.extend(VGG_BLOCKS[b])
    prefix.append(VGG_BLOCKS[layer - 1][0])
    return [(cout, cin) for (_, cin, cout) in reversed(prefix)]


def decoder_conv_specs(layer: int, conv_keys: list[str], layout: str = "oihw") -> list[TensorSpec]:
    """Positional conversion map for one decoder checkpoint.

    ``conv_keys`` are the checkpoint's conv parameter prefixes in network
    order (key ``K`` implies tensors ``K.weight`` and ``K.bias``).
    """
    plan = decoder_channel_plan(layer)
    if len(conv_keys) != len(plan):
        raise ValueError(
            f"decoder{layer} has {len(conv_keys)} conv entries, expected {len(plan)}"
        )
    perm = LAYOUT_PERMUTATIONS[layout]
    specs = []
    for idx, (key, (cin, cout)) in enumerate(zip(conv_keys, plan)):
        native = (cout, cin, 3, 3)
        stored = tuple(native[perm.index(ax)] for ax in range(4))
        specs.append(
            TensorSpec(
                source_key=f"{key}.weight",
                target_name=f"decoder{layer}.conv{idx}.weight",
                expected_shape=stored,
                permutation=perm,
            )
        )
        specs.append(
            TensorSpec(
                source_key=f"{key}.bias",
                target_name=f"decoder{layer}.conv{idx}.bias",
                expected_shape=(cout,),
                permutation=(0,),
            )
        )
    return specs


def layer_manifest() -> dict:
    """OTWA layer manifest: the tensor names each target layer requires."""
    manifest = {}
    for layer in range(1, 6):
        enc = []
        for b in range(layer - 1):
            for name, _, _ in VGG_BLOCKS[b]:
                enc.extend([f"encoder.{name}.weight", f"encoder.{name}.bias"])
        first = VGG_BLOCKS[layer - 1][0][0]
        enc.extend([f"encoder.{first}.weight", f"encoder.{first}.bias"])
        dec = []
        for idx in range(len(decoder_channel_plan(layer))):
            dec.extend([f"decoder{layer}.conv{idx}.weight", f"decoder{layer}.conv{idx}.bias"])
        manifest[str(layer)] = {"encoder": enc, "decoder": dec}
    return manifest
