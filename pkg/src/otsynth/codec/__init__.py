"""Feature codecs: image <-> feature-space encoders/decoders.

Both codecs expose the same surface — ``channels(layer)``,
``downsample_factor(layer)``, ``encode(img, layer)``, ``decode(features,
layer)`` and a ``name`` — so pipeline code never branches on which one is
in use.
"""

from dataclasses import dataclass

from .archive import WeightArchive, load_archive, save_archive
from .bands import PyramidCodec
from .ops import conv2d, max_pool2, relu, upsample_nn2
from .vgg import VggCodec, standard_manifest


@dataclass(frozen=True)
class CodecLayer:
    """Descriptor of one target layer of a codec."""

    layer_index: int
    downsample_factor: int
    channels: int


def describe_layer(codec, layer: int) -> CodecLayer:
    return CodecLayer(
        layer_index=layer,
        downsample_factor=codec.downsample_factor(layer),
        channels=codec.channels(layer),
    )


__all__ = [
    "CodecLayer",
    "PyramidCodec",
    "VggCodec",
    "WeightArchive",
    "conv2d",
    "describe_layer",
    "load_archive",
    "max_pool2",
    "relu",
    "save_archive",
    "standard_manifest",
    "upsample_nn2",
]
