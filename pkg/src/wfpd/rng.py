"""Reproducible random streams.

Streams are Philox (counter-based) generators keyed by ``(seed, *path)``, so
replicate ``r`` of a run seeded with ``s`` always sees the same numbers no
matter how replicates are scheduled.
"""
from __future__ import annotations

import numpy as np

MAX_SEED = 2**64 - 1


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Return the generator for stream ``stream`` under ``seed``.

    >>> make_rng(7, 3).random() == make_rng(7, 3).random()
    True
    """
    seed = int(seed)
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    if any(int(s) < 0 for s in stream):
        raise ValueError("stream indices must be nonnegative")
    ss = np.random.SeedSequence([seed, len(stream), *map(int, stream)])
    return np.random.Generator(np.random.Philox(ss))


def as_rng(rng) -> np.random.Generator:
    """Accept a Generator, an int seed, or None (seed 0)."""
    if isinstance(rng, np.random.Generator):
        return rng
    return make_rng(0 if rng is None else rng)
