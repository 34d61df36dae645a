"""Seeded, splittable random streams.

Every random draw in the package flows from an integer seed through a
counter-based Philox generator; independent streams are derived with
``SeedSequence`` spawn keys, so no global state is touched.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed=0, *keys: int) -> np.random.Generator:
    """Generator for ``seed`` and an optional path of integer sub-stream keys."""
    if isinstance(seed, np.random.Generator):
        return seed
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def spawn(seed, n: int) -> list[np.random.Generator]:
    """``n`` independent generators derived from ``seed``."""
    return [make_rng(seed, i) for i in range(n)]
