"""Seeded random source with a platform-stable draw procedure.

Wraps the standard library's MT19937 (a twisted generalized feedback shift
register). Only ``getrandbits`` is used for draws, because CPython guarantees
that stream for a given integer seed but not the algorithms behind
``randrange``/``choice``/``shuffle``.
"""

from __future__ import annotations

import random
from typing import MutableSequence, Sequence, TypeVar

T = TypeVar("T")

RNG_NAME = "mt19937"
SEED_MAX = 2**64 - 1


class Rng:
    def __init__(self, seed: int):
        if not 0 <= seed <= SEED_MAX:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self._mt = random.Random(seed)

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection sampling."""
        if n <= 0:
            raise ValueError("n must be positive")
        k = n.bit_length()
        while True:
            r = self._mt.getrandbits(k)
            if r < n:
                return r

    def between(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi]."""
        return lo + self.below(hi - lo + 1)

    def choice(self, seq: Sequence[T]) -> T:
        return seq[self.below(len(seq))]

    def shuffle(self, seq: MutableSequence[T]) -> None:
        for i in range(len(seq) - 1, 0, -1):
            j = self.below(i + 1)
            seq[i], seq[j] = seq[j], seq[i]

    def sample(self, seq: Sequence[T], k: int) -> list[T]:
        pool = list(seq)
        if k > len(pool):
            raise ValueError("sample larger than population")
        # partial Fisher-Yates from the front
        for i in range(k):
            j = i + self.below(len(pool) - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]

    def getstate(self) -> object:
        return self._mt.getstate()

    def setstate(self, state: object) -> None:
        self._mt.setstate(state)
