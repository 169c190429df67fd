"""Deterministic random streams keyed by (seed, purpose, index).

Every stream is a Philox counter-based generator derived from a
SeedSequence spawn key, so a stream depends only on its key tuple, never on
how many draws other streams have consumed. That is what makes bootstrap
replicates and Monte Carlo replicates schedule-independent: worker threads
or processes can pick up replicates in any order and still produce
bit-identical results.
"""

from __future__ import annotations

import numpy as np

# Purpose tags: first element of every spawn key, so streams for different
# purposes can never collide even when their indices do.
TAG_MULTIPLIER = 0
TAG_DATA = 1
TAG_TEST_SEED = 2
TAG_CALIBRATION = 3

__all__ = [
    "TAG_MULTIPLIER",
    "TAG_DATA",
    "TAG_TEST_SEED",
    "TAG_CALIBRATION",
    "derive_rng",
    "derive_seed",
]


def derive_rng(seed: int, *path: int) -> np.random.Generator:
    """Generator for the stream keyed by (seed, *path)."""
    ss = np.random.SeedSequence(seed, spawn_key=tuple(path))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *path: int) -> int:
    """A u64 sub-seed keyed by (seed, *path), for APIs that take one."""
    ss = np.random.SeedSequence(seed, spawn_key=tuple(path))
    return int(ss.generate_state(1, np.uint64)[0])
