"""Seeding helpers.

All randomness flows through numpy's Philox generator, a 64-bit
counter-based RNG: identical seeds give identical streams on every
platform, and independent substreams for parallel work come from
keying a SeedSequence with the position in the work grid rather than
from ad-hoc reseeding.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int | None) -> np.random.Generator:
    """A Philox-backed generator for the given seed."""
    return np.random.Generator(np.random.Philox(seed))


def substream(seed: int | None, *key: int) -> np.random.Generator:
    """Generator for an independent substream of ``seed``.

    The integer key identifies the substream (e.g. replication and cell
    indices); distinct keys give statistically independent streams.
    """
    seq = np.random.SeedSequence(entropy=seed, spawn_key=tuple(key))
    return np.random.Generator(np.random.Philox(seq))
