"""Counter-based seeded random streams.

Every stream is addressed by ``(master_seed, stream_index[, substream])`` and
backed by Philox, so the numbers drawn for a given address never depend on
which worker drew them or in what order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SeededRng:
    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        if self.stream_index < 0:
            raise ValueError("stream_index must be nonnegative")
        object.__setattr__(self, "master_seed", int(self.master_seed) & _MASK64)

    def generator(self, substream: int | None = None) -> np.random.Generator:
        key = (self.stream_index,) if substream is None else (self.stream_index, int(substream))
        seq = np.random.SeedSequence(self.master_seed, spawn_key=key)
        return np.random.Generator(np.random.Philox(seq))

    def stream(self, index: int) -> SeededRng:
        return SeededRng(self.master_seed, index)


def as_rng(seed: int | SeededRng) -> SeededRng:
    if isinstance(seed, SeededRng):
        return seed
    return SeededRng(int(seed))
