"""Deterministic seed derivation.

Every stochastic component derives its random state from a master seed
plus a tuple of integer keys (patch index, read index, iteration, ...)
through ``numpy.random.SeedSequence``, which acts as a stable hash.
Identical (seed, keys) always yield identical streams, independent of
worker scheduling.
"""

from __future__ import annotations

import numpy as np

# Domain tags keep streams apart when they share the same (seed, keys),
# e.g. the initial-state draw vs. the per-read kernel seeds.
TAG_INIT = 0x496E6974  # "Init"
TAG_KERNEL = 0x4B65726E  # "Kern"
TAG_ORDER = 0x4F726472  # "Ordr"


def seed_sequence(seed: int, *keys: int) -> np.random.SeedSequence:
    """Stable SeedSequence for (seed, *keys); all entries must be integers."""
    entropy = [int(seed)] + [int(k) for k in keys]
    if any(e < 0 for e in entropy):
        raise ValueError(f"seed keys must be non-negative, got {entropy}")
    return np.random.SeedSequence(entropy)


def spawn_rng(seed: int, *keys: int) -> np.random.Generator:
    """Generator keyed by (seed, *keys)."""
    return np.random.default_rng(seed_sequence(seed, *keys))


def kernel_seeds(seed: int, *keys: int, count: int) -> np.ndarray:
    """``count`` uint32 seeds for compiled kernels, keyed by (seed, *keys)."""
    return seed_sequence(seed, *keys).generate_state(count, dtype=np.uint32)


def derived_seed(seed: int, *keys: int) -> int:
    """Single derived integer seed (uint32 range), keyed by (seed, *keys)."""
    return int(seed_sequence(seed, *keys).generate_state(1, dtype=np.uint32)[0])
