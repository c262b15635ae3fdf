"""Counter-based random streams addressed by (master seed, path).

Algorithm ``agentworld-splitmix64/1``:

* The stream key is the first 8 bytes (little endian) of a BLAKE2b digest
  (``digest_size=8``, ``person=b"agentworld-prng"``) over the master seed as
  8 little-endian bytes followed by every path component, each encoded as
  UTF-8 and prefixed by its byte length as 4 little-endian bytes. Integer
  components are encoded through ``str()``.
* Draw ``i`` (0-based) is ``mix(key + (i + 1) * 0x9E3779B97F4A7C15 mod 2**64)``
  where ``mix`` is the SplitMix64 finalizer.
* Floats take the top 53 bits: ``(u >> 11) * 2**-53``.

Any draw depends only on (seed, path, counter), never on scheduling order, so
any implementation following the three rules above reproduces the same values.
"""

from __future__ import annotations

import hashlib
import math
import struct
from collections.abc import Sequence
from typing import TypeVar

ALGORITHM = "agentworld-splitmix64/1"

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GAMMA = 0x9E3779B97F4A7C15
_TWO_NEG53 = 2.0**-53

T = TypeVar("T")


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_key(seed: int, path: Sequence[str | int]) -> int:
    h = hashlib.blake2b(digest_size=8, person=b"agentworld-prng")
    h.update(struct.pack("<Q", seed & _MASK64))
    for part in path:
        raw = str(part).encode("utf-8")
        h.update(struct.pack("<I", len(raw)))
        h.update(raw)
    return int.from_bytes(h.digest(), "little")


class PRNGStream:
    """One addressable random stream.

    ``child()`` derives an independent stream from the extended path; the
    parent's counter is untouched, so adding draws to one stage never shifts
    another stage's values.
    """

    __slots__ = ("seed", "path", "key", "counter")

    def __init__(self, seed: int, path: Sequence[str | int] = ()):
        self.seed = int(seed) & _MASK64
        self.path = tuple(str(p) for p in path)
        self.key = derive_key(self.seed, self.path)
        self.counter = 0

    def __repr__(self) -> str:
        return f"PRNGStream(seed={self.seed}, path={'/'.join(self.path)!r}, counter={self.counter})"

    def child(self, *parts: str | int) -> PRNGStream:
        return PRNGStream(self.seed, self.path + tuple(str(p) for p in parts))

    def next_u64(self) -> int:
        self.counter += 1
        return _mix((self.key + self.counter * _GAMMA) & _MASK64)

    def random(self) -> float:
        """Uniform float in [0, 1)."""
        return (self.next_u64() >> 11) * _TWO_NEG53

    def uniform(self, lo: float, hi: float) -> float:
        if hi < lo:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        x = lo + (hi - lo) * self.random()
        return min(max(x, lo), hi)

    def integers(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi) by rejection, no modulo bias."""
        n = hi - lo
        if n <= 0:
            raise ValueError(f"empty range [{lo}, {hi})")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            u = self.next_u64()
            if u < limit:
                return lo + u % n

    def bernoulli(self, p: float) -> bool:
        return self.random() < p

    def choice(self, items: Sequence[T]) -> T:
        if not items:
            raise ValueError("choice from empty sequence")
        return items[self.integers(0, len(items))]

    def weighted_choice(self, items: Sequence[T], weights: Sequence[float]) -> T:
        total = math.fsum(weights)
        if not items or total <= 0:
            raise ValueError("weighted choice needs positive total weight")
        r = self.random() * total
        acc = 0.0
        for item, w in zip(items, weights):
            acc += w
            if r < acc:
                return item
        return items[-1]

    def shuffled(self, items: Sequence[T]) -> list[T]:
        out = list(items)
        for i in range(len(out) - 1, 0, -1):
            j = self.integers(0, i + 1)
            out[i], out[j] = out[j], out[i]
        return out

    def log_uniform(self, lo: float, hi: float) -> float:
        x = math.exp(self.uniform(math.log(lo), math.log(hi)))
        return min(max(x, lo), hi)

    def triangular(self, lo: float, mode: float, hi: float) -> float:
        u = self.random()
        c = (mode - lo) / (hi - lo)
        if u < c:
            x = lo + math.sqrt(u * (hi - lo) * (mode - lo))
        else:
            x = hi - math.sqrt((1.0 - u) * (hi - lo) * (hi - mode))
        return min(max(x, lo), hi)
