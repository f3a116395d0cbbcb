"""otsynth: texture synthesis and transfer via sliced optimal transport."""

from .codec import PyramidCodec, VggCodec, WeightArchive, load_archive, save_archive
from .color import color_transfer_combined, color_transfer_global, hsl_to_rgb, luminance_transfer, rgb_to_hsl
from .histmatch import Histogram1D, build_histogram, match_histogram, match_sorted
from .mixing import MixSpec, compute_mapping, mix_distributions, synthesize_mixture
from .painting import GuidanceMasks, guided_synthesize, rebalance_target, reweight_output
from .pca import PcaBasis, fit_pca, from_subspace, to_subspace
from .pipeline import PyramidLevel, SynthesisConfig, build_pyramid, synthesize, synthesize_level, upscale_bicubic
from .slicedot import (
    OtParams,
    align_mean,
    blend_content,
    deproject,
    match_slice,
    optimal_transport,
    project,
    random_basis,
    sliced_wasserstein,
)
from .tensors import flatten, image_to_tensor, read_png, tensor_to_image, unflatten, write_png

__version__ = "0.1.0"

__all__ = [
    "GuidanceMasks",
    "Histogram1D",
    "MixSpec",
    "OtParams",
    "PcaBasis",
    "PyramidCodec",
    "PyramidLevel",
    "SynthesisConfig",
    "VggCodec",
    "WeightArchive",
    "align_mean",
    "blend_content",
    "build_histogram",
    "build_pyramid",
    "color_transfer_combined",
    "color_transfer_global",
    "compute_mapping",
    "deproject",
    "fit_pca",
    "flatten",
    "from_subspace",
    "guided_synthesize",
    "hsl_to_rgb",
    "image_to_tensor",
    "load_archive",
    "luminance_transfer",
    "match_histogram",
    "match_slice",
    "match_sorted",
    "mix_distributions",
    "optimal_transport",
    "project",
    "random_basis",
    "read_png",
    "rebalance_target",
    "reweight_output",
    "rgb_to_hsl",
    "save_archive",
    "sliced_wasserstein",
    "synthesize",
    "synthesize_level",
    "synthesize_mixture",
    "tensor_to_image",
    "to_subspace",
    "unflatten",
    "upscale_bicubic",
    "write_png",
]
