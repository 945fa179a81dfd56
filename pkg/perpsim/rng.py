"""
Reproducible per-replication random streams.

A stream is a Philox counter-based generator keyed by the run seed; the replication index
occupies its own word of the 256-bit counter, so streams never overlap and do not depend on
how replications are spread over workers.
"""
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

MASK64 = (1 << 64) - 1


@lru_cache(maxsize=64)
def philox_key(seed):
    return np.random.SeedSequence(seed & MASK64).generate_state(2, dtype=np.uint64)


@dataclass
class RngStream:
    seed: int
    stream_id: int = 0
    _gen: np.random.Generator | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if self.seed < 0 or self.stream_id < 0:
            raise ValueError("seed and stream_id must be non-negative")

    @property
    def generator(self):
        if self._gen is None:
            counter = np.array([0, 0, self.stream_id & MASK64, 0], dtype=np.uint64)
            self._gen = np.random.Generator(np.random.Philox(key=philox_key(self.seed), counter=counter))
        return self._gen

    def spawn(self, stream_id):
        return RngStream(self.seed, stream_id)
