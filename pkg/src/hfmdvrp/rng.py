"""Portable seeded random numbers.

Instances must regenerate bit-for-bit on any machine, so generation does not
use ``random`` or numpy's distribution methods (whose streams may change
between releases). The generator is xoshiro256** with its 256-bit state
expanded from a 64-bit seed by SplitMix64, following the reference
implementations by Blackman and Vigna.
"""

from __future__ import annotations

import math
from typing import Sequence, TypeVar

MASK64 = (1 << 64) - 1

T = TypeVar("T")


def splitmix64(x: int) -> int:
    """One SplitMix64 output for state ``x`` (the state advanced by the golden gamma)."""
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Mix a base seed with a stream index into an independent 64-bit seed."""
    return splitmix64((splitmix64(seed & MASK64) + (index & MASK64)) & MASK64)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256:
    """xoshiro256** generator.

    State transition and output function are the published ones; seeding
    fills the four state words with successive SplitMix64 outputs.
    """

    def __init__(self, seed: int) -> None:
        s = seed & MASK64
        words = []
        for _ in range(4):
            words.append(splitmix64(s))
            s = (s + 0x9E3779B97F4A7C15) & MASK64
        self._s = words
        self._spare_normal: float | None = None

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & MASK64, 7) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection (no modulo bias)."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def integers(self, low: int, high: int) -> int:
        """Uniform integer in the closed range [low, high]."""
        return low + self.below(high - low + 1)

    def choice(self, items: Sequence[T]) -> T:
        return items[self.below(len(items))]

    def normal(self, mean: float = 0.0, sd: float = 1.0) -> float:
        """Gaussian draw via the Box-Muller transform (pairs cached)."""
        if self._spare_normal is not None:
            z, self._spare_normal = self._spare_normal, None
            return mean + sd * z
        u1 = 1.0 - self.random()  # (0, 1]
        u2 = self.random()
        r = math.sqrt(-2.0 * math.log(u1))
        self._spare_normal = r * math.sin(2.0 * math.pi * u2)
        return mean + sd * r * math.cos(2.0 * math.pi * u2)
