"""Seeded random streams.

Every sampler draws from numpy's Philox4x64-10 counter-based bit generator,
keyed by ``SeedSequence([seed, *stream])``. The same seed and stream labels
give bitwise-identical draws on every platform numpy supports.
"""

from __future__ import annotations

import numpy as np

ALGORITHM = "numpy.random.Philox (Philox4x64-10), keyed by SeedSequence([seed, *stream])"


def generator(seed: int, *stream: int) -> np.random.Generator:
    seed = int(seed)
    if seed < 0 or seed >= 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *map(int, stream)])))
