"""Deterministic random-number streams.

One root seed drives a whole synthesis run.  Every site that needs
randomness derives its own generator from the root seed plus a tuple of
position indices (pyramid level, global pass, layer, ...), so results do
not depend on evaluation order or parallelism.
"""

from __future__ import annotations

import numpy as np

# Tags namespacing the derivation key so unrelated streams never collide.
INIT_NOISE = 0
TRANSPORT = 1
MIXING_MASK = 2
MAPPING = 3
REBALANCE = 4
METRIC = 5


def derive(seed: int, *key: int) -> np.random.Generator:
    """Generator for one pipeline site, keyed by its position indices."""
    seq = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(seq)
