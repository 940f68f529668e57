"""Counter-based seed splitting so serial and parallel runs draw the same streams."""

import numpy as np


def rng_for(seed: int, *keys: int) -> np.random.Generator:
    """Generator for the stream addressed by ``keys`` under the master ``seed``."""
    return np.random.default_rng(
        np.random.SeedSequence(int(seed) & (2 ** 64 - 1), spawn_key=tuple(int(k) for k in keys)))
