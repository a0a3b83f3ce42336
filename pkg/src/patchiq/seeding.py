"""Deterministic RNG derivation.

Every random decision in the package flows through a generator derived from
(seed, stream, *keys) via SeedSequence, so any two runs with the same seeds
are bit-identical and independent streams never collide.
"""

from __future__ import annotations

import numpy as np

STREAM_MODEL_INIT = 1
STREAM_SPLIT = 2
STREAM_SHUFFLE = 3
STREAM_AUGMENT = 4
STREAM_CROPS = 5
STREAM_SYNTH = 6
STREAM_LABEL_SHUFFLE = 7


def rng_for(seed: int, stream: int, *keys: int) -> np.random.Generator:
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF, int(stream)] + [int(k) & 0xFFFFFFFF for k in keys]
    return np.random.default_rng(np.random.SeedSequence(entropy))
