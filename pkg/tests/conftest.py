import numpy as np
import pytest

from otsynth.codec import WeightArchive, standard_manifest
from otsynth.codec.vgg import UPSAMPLE, VGG_BLOCKS, decoder_plan


def build_test_archive(seed: int = 0, zero_bias: bool = True, means=(0.0, 0.0, 0.0)) -> WeightArchive:
    """Synthetic VGG archive with He-scaled random weights.

    Activations stay finite through the whole stack, which is all the
    engine-side tests need; real weights come from the converter tool.
    """
    rng = np.random.default_rng(seed)
    tensors = {}
    for block in VGG_BLOCKS:
        for name, cin, cout in block:
            scale = np.sqrt(2.0 / (cin * 9))
            tensors[f"encoder.{name}.weight"] = (rng.standard_normal((cout, cin, 3, 3)) * scale).astype(np.float32)
            tensors[f"encoder.{name}.bias"] = (
                np.zeros(cout, dtype=np.float32) if zero_bias else rng.standard_normal(cout).astype(np.float32) * 0.01
            )
    for layer in range(1, 6):
        idx = 0
        for op in decoder_plan(layer):
            if op == UPSAMPLE:
                continue
            _, cin, cout = op
            scale = np.sqrt(2.0 / (cin * 9))
            tensors[f"decoder{layer}.conv{idx}.weight"] = (rng.standard_normal((cout, cin, 3, 3)) * scale).astype(np.float32)
            tensors[f"decoder{layer}.conv{idx}.bias"] = (
                np.zeros(cout, dtype=np.float32) if zero_bias else rng.standard_normal(cout).astype(np.float32) * 0.01
            )
            idx += 1
    metadata = {"preprocess": {"rgb_means": list(means)}, "layers": standard_manifest()}
    return WeightArchive(metadata=metadata, tensors=tensors)


@pytest.fixture(scope="session")
def vgg_archive():
    return build_test_archive(seed=0)
