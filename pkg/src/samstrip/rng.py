"""Portable deterministic random numbers for phantom synthesis.

The generator is xoshiro256** with per-lane states seeded by splitmix64,
stepped in lockstep across lanes so large draws vectorize. The exact
stream is pinned here so phantoms are reproducible across machines and
language ports; nothing downstream depends on the particular stream.
"""
from __future__ import annotations

import numpy as np

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def _splitmix64(state: np.ndarray) -> np.ndarray:
    """One splitmix64 output per element; `state` is pre-incremented."""
    z = state
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9) & _MASK
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB) & _MASK
    return z ^ (z >> np.uint64(31))


def _rotl(x: np.ndarray, k: int) -> np.ndarray:
    return ((x << np.uint64(k)) | (x >> np.uint64(64 - k))) & _MASK


class Xoshiro256StarStar:
    """Lane-parallel xoshiro256** keyed by a single 64-bit seed."""

    def __init__(self, seed: int, lanes: int = 1024):
        if lanes < 1:
            raise ValueError("lanes must be >= 1")
        counter = np.arange(1, 4 * lanes + 1, dtype=np.uint64)
        init = _splitmix64((np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + counter * _GOLDEN) & _MASK)
        self._s = [init[i::4].copy() for i in range(4)]
        self._lanes = lanes

    def _step(self) -> np.ndarray:
        s0, s1, s2, s3 = self._s
        out = (_rotl(s1 * np.uint64(5) & _MASK, 7) * np.uint64(9)) & _MASK
        t = (s1 << np.uint64(17)) & _MASK
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return out

    def integers(self, n: int) -> np.ndarray:
        """First `n` values of the interleaved lane stream, as uint64."""
        steps = -(-n // self._lanes)
        blocks = [self._step() for _ in range(steps)]
        return np.concatenate(blocks)[:n]

    def uniform(self, n: int) -> np.ndarray:
        """Uniform draws in (0, 1], 53-bit resolution."""
        bits = self.integers(n)
        return ((bits >> np.uint64(11)) + np.uint64(1)) * 2.0**-53

    def normal(self, n: int, sigma: float = 1.0) -> np.ndarray:
        """Gaussian draws via Box-Muller on paired uniforms."""
        m = n + (n & 1)
        u = self.uniform(m)
        u1, u2 = u[: m // 2], u[m // 2 :]
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        out = np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:n]
        return out * sigma
