"""Deterministic PRNG with a single-integer state.

splitmix64: chosen over random.Random because its whole state is one uint64,
which serializes directly into state hashes and record headers, and its
arithmetic is integer-only so streams are identical on every platform.
"""

from __future__ import annotations

from dataclasses import dataclass

_MASK = (1 << 64) - 1


@dataclass
class Prng:
    state: int

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return (z ^ (z >> 31)) & _MASK

    def randrange(self, n: int) -> int:
        """Uniform-ish integer in [0, n). n must be >= 1."""
        if n < 1:
            raise ValueError("randrange needs n >= 1")
        return self.next_u64() % n

    def randint(self, lo: int, hi: int) -> int:
        """Integer in [lo, hi] inclusive."""
        return lo + self.randrange(hi - lo + 1)

    def chance(self, percent: int) -> bool:
        return self.randrange(100) < percent
