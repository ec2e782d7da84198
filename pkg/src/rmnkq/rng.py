"""Seeded random streams.

Every random draw in the package goes through :func:`stream`. A stream is a
PCG64 generator whose state is derived from a root seed plus a spawn key
(e.g. ``(run_seed, iteration)``) via :class:`numpy.random.SeedSequence`, so
independent streams never overlap and results do not depend on the order in
which streams are created.
"""

from __future__ import annotations

import numpy as np

MAX_SEED = 2**64 - 1


def stream(seed: int, *key: int) -> np.random.Generator:
    """Return the generator for ``seed`` and the (possibly empty) spawn key."""
    if not 0 <= int(seed) <= MAX_SEED:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def as_generator(seed_or_rng: int | np.random.Generator, *key: int) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return stream(seed_or_rng, *key)
