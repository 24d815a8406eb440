"""Keyed, splittable random streams.

Every random draw in the package comes from a :class:`RngStream`, which is a
seed plus a tuple of integer keys. The generator is Philox (counter based)
seeded through ``SeedSequence(seed, spawn_key=key)``, so a stream is fully
determined by its key path and never by call order. Monte Carlo shards and
channel realizations therefore reproduce bit for bit regardless of how the
work is split.

Key layout used across the package::

    (CHANNEL, realization)                 channel small-scale fading
    (PHASE, realization)                   random-phase baseline
    (RESTART, realization, r)              optimizer random restarts
    (NOISE, realization, block)            Monte Carlo bits and noise
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CHANNEL = 1
NOISE = 2
PHASE = 3
RESTART = 4

SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    seed: int
    key: tuple[int, ...] = ()

    def __post_init__(self):
        if not 0 <= int(self.seed) <= SEED_MASK:
            raise ValueError(f"seed must fit in 64 bits, got {self.seed}")

    def child(self, *key: int) -> "RngStream":
        return RngStream(self.seed, self.key + tuple(int(k) for k in key))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=self.key)
        return np.random.Generator(np.random.Philox(ss))


def as_generator(rng) -> np.random.Generator:
    """Accept an RngStream, a Generator or an int seed."""
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return RngStream(int(rng)).generator()
