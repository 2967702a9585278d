"""Counter-based 64-bit random numbers.

Every draw is a pure function of ``(seed, stream, counter)``. The generator
is SplitMix64 with random access: the stream key is

    key = mix64(mix64(seed) ^ (stream * GAMMA mod 2^64))

and draw ``k`` is ``mix64(key + (k + 1) * GAMMA mod 2^64)``, where

    GAMMA = 0x9E3779B97F4A7C15
    mix64(z): z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
              z = (z ^ (z >> 27)) * 0x94D049BB133111EB
              return z ^ (z >> 31)

all arithmetic modulo 2^64. Doubles in ``[0, 1)`` use the top 53 bits;
normals use Box-Muller on the draw pair ``(2k, 2k + 1)``. Bounded integers in
``[0, m)`` are ``(u * m) >> 64``.
"""

import hashlib

import numpy as np

__all__ = ["CounterRNG", "mix64", "stream_id"]

MASK = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def mix64(z):
    """SplitMix64 finalizer on a Python int."""
    z &= MASK
    z = ((z ^ (z >> 30)) * _M1) & MASK
    z = ((z ^ (z >> 27)) * _M2) & MASK
    return z ^ (z >> 31)


def _mix64_array(z):
    z = z.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= np.uint64(_M1)
    z ^= z >> np.uint64(27)
    z *= np.uint64(_M2)
    z ^= z >> np.uint64(31)
    return z


def stream_id(name):
    """Stable 64-bit id of a named stream."""
    return int.from_bytes(hashlib.sha256(name.encode()).digest()[:8], "little")


class CounterRNG:
    """Random access generator for one ``(seed, stream)`` pair."""

    def __init__(self, seed, stream=0):
        if isinstance(stream, str):
            stream = stream_id(stream)
        self.seed = int(seed) & MASK
        self.stream = int(stream) & MASK
        self.key = mix64(mix64(self.seed) ^ ((self.stream * GAMMA) & MASK))

    def uint64(self, counters):
        """Raw draws for an array of nonnegative counters."""
        c = np.asarray(counters, dtype=np.uint64)
        z = np.uint64(self.key) + (c + np.uint64(1)) * np.uint64(GAMMA)
        return _mix64_array(z)

    def uint64_scalar(self, counter):
        return mix64(self.key + (int(counter) + 1) * GAMMA)

    def uniform(self, counters):
        return (self.uint64(counters) >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)

    def uniform_block(self, start, size):
        return self.uniform(np.arange(start, start + size, dtype=np.uint64))

    def normal_block(self, start, size):
        """``size`` standard normals using counters ``2*start ..``."""
        base = 2 * start
        u = self.uniform(np.arange(base, base + 2 * size, dtype=np.uint64))
        u1, u2 = u[0::2], u[1::2]
        return np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * np.pi * u2)

    def bounded(self, counter, m):
        return (self.uint64_scalar(counter) * m) >> 64
