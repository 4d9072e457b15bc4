"""
Random Streams
Reproducible, independently seeded random streams for parallel runs
"""
from typing import Tuple

import numpy as np


class StreamKind:
    ESTIMATION = 1
    SIMULATION = 2
    ATTRIBUTES = 3
    STUDY = 4


class RandomStream:
    """
    Buffered uniform stream on a counter-based Philox generator.

    The stream is keyed by (master_seed, *key) so that each run draws the
    same numbers regardless of which worker process executes it. Uniforms
    are drawn from numpy in blocks; scalar draws read from the buffer.
    """

    BLOCK_SIZE = 8192

    def __init__(self, master_seed: int, key: Tuple[int, ...] = ()):
        self.master_seed = int(master_seed)
        self.key = tuple(int(k) for k in key)
        seed_seq = np.random.SeedSequence(entropy=self.master_seed, spawn_key=self.key)
        self.generator = np.random.Generator(np.random.Philox(seed_seq))
        self._buffer: list = []
        self._pos = 0

    @classmethod
    def for_run(cls, master_seed: int, kind: int, index: int, *extra: int) -> "RandomStream":
        """Stream for one run, simulation or study replicate."""
        return cls(master_seed, (kind, index) + tuple(extra))

    def _refill(self) -> None:
        self._buffer = self.generator.random(self.BLOCK_SIZE).tolist()
        self._pos = 0

    def uniform(self) -> float:
        """Uniform draw on [0, 1)."""
        if self._pos >= len(self._buffer):
            self._refill()
        u = self._buffer[self._pos]
        self._pos += 1
        return u

    def integer(self, n: int) -> int:
        """Uniform integer on 0..n-1."""
        if self._pos >= len(self._buffer):
            self._refill()
        u = self._buffer[self._pos]
        self._pos += 1
        k = int(u * n)
        return k if k < n else n - 1


def derive_seed(master_seed: int, *key: int) -> int:
    """Integer seed for a sub-task, stable for a given (master_seed, key)."""
    seed_seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in key))
    return int(seed_seq.generate_state(1, dtype=np.uint32)[0])
