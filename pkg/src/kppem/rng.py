"""Seeded random streams.

Every consumer draws from its own stream, derived from ``(seed, purpose, index)``
through ``numpy.random.SeedSequence`` spawn keys, so simulation and
multi-start initialization never share draws.
"""

import numpy as np

PURPOSES = {"simulate": 1, "init": 2, "test": 3}


def stream(seed: int, purpose: str, index: int = 0) -> np.random.Generator:
    if purpose not in PURPOSES:
        raise ValueError(f"unknown stream purpose {purpose!r}")
    ss = np.random.SeedSequence(int(seed), spawn_key=(PURPOSES[purpose], int(index)))
    return np.random.Generator(np.random.PCG64(ss))
