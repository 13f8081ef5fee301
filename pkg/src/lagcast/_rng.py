"""Deterministic scalar random streams for series synthesis.

The synthetic generators promise that a seed fully pins the series on
every platform.  numpy's bit generators are stable too, but the normal
sampler they ship is a rejection method whose internals are not part of
the public contract.  To keep the promise cheap to audit we use two
textbook pieces:

* SplitMix64 for the underlying 64-bit integer stream.
* Box-Muller for turning pairs of uniforms into gaussians.

Both are a handful of integer/float operations with no data-dependent
branching, so identical seeds give identical doubles everywhere.
"""

from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """64-bit SplitMix generator (Steele, Lea and Flood's mixer)."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_uint64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def next_double(self) -> float:
        # 53 significant bits, uniform in [0, 1)
        return (self.next_uint64() >> 11) * (1.0 / (1 << 53))


class GaussianStream:
    """Standard normal deviates via Box-Muller over SplitMix64."""

    def __init__(self, seed: int):
        self._bits = SplitMix64(seed)
        self._spare: float | None = None

    def next_gaussian(self) -> float:
        if self._spare is not None:
            z = self._spare
            self._spare = None
            return z
        # u1 must be nonzero for the log; shift the lattice away from 0
        u1 = 1.0 - self._bits.next_double()
        u2 = self._bits.next_double()
        r = math.sqrt(-2.0 * math.log(u1))
        self._spare = r * math.sin(2.0 * math.pi * u2)
        return r * math.cos(2.0 * math.pi * u2)

    def gaussians(self, n: int, mu: float = 0.0, sigma: float = 1.0) -> list[float]:
        return [mu + sigma * self.next_gaussian() for _ in range(n)]
