"""Deterministic per-word random streams.

Every random quantity in the reference retrievers (dense embeddings, sparse
expansion tables) is drawn from a SplitMix64 stream whose seed is
FNV-1a(word) XOR a global model seed.  The construction is fixed down to the
bit level so that two builds with the same seed produce identical models on
any platform.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3

_SM64_GAMMA = 0x9E3779B97F4A7C15
_SM64_MIX1 = 0xBF58476D1CE4E5B9
_SM64_MIX2 = 0x94D049BB133111EB


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash."""
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


class SplitMix64:
    """SplitMix64 generator (Steele et al. splittable-RNG output function)."""

    def __init__(self, seed: int) -> None:
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _SM64_GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _SM64_MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _SM64_MIX2) & _MASK64
        return z ^ (z >> 31)

    def next_unit(self) -> float:
        """Uniform float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def next_symmetric(self) -> float:
        """Uniform float in [-1, 1)."""
        return 2.0 * self.next_unit() - 1.0

    def next_weight(self) -> float:
        """Uniform float in (0, 0.5], used for expansion weights."""
        return 0.5 * (1.0 - self.next_unit())

    def next_below(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise ValueError("n must be positive")
        return self.next_u64() % n


def word_stream(word: str, seed: int) -> SplitMix64:
    """Stream for one word under one global seed."""
    return SplitMix64(fnv1a64(word.encode("utf-8")) ^ (seed & _MASK64))
