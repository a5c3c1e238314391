"""Deterministic 64-bit RNG used everywhere randomness is needed.

This is the splitmix64 generator: a counter-based design where draw k is a
pure function of ``seed + k * GOLDEN``. That property matters here because
the compiled simulation kernel consumes the stream one scalar at a time in C
while the pure-Python fallback draws it in vectorized numpy batches, and both
must produce bit-identical values. Python's ``random`` module cannot give
that guarantee across the two consumption styles, so we carry our own.
"""

from __future__ import annotations

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
MASK64 = (1 << 64) - 1

# Stream labels: independent substreams are derived by mixing the user seed
# with one of these before use, so e.g. topology construction and the round
# loop never share draws.
STREAM_TOPOLOGY = 0x746F706F
STREAM_ROUNDS = 0x726E6473
STREAM_ATTACK = 0x61746B73


def mix64(z: int) -> int:
    """Finalizer applied to the raw counter; full 64-bit avalanche."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return (z ^ (z >> 31)) & MASK64


def derive_state(seed: int, label: int) -> int:
    """Initial counter state for an independent substream of ``seed``."""
    return mix64((seed & MASK64) ^ mix64(label))


class SplitMix64:
    """Scalar stream with an explicit counter state.

    ``state`` after ``k`` draws equals ``initial + k * GOLDEN`` (mod 2**64),
    and draw ``k`` is ``mix64`` of that state.
    """

    __slots__ = ("state",)

    def __init__(self, state: int):
        self.state = state & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)

    def next_below(self, bound: int) -> int:
        """Uniform draw in [0, bound) by modulo reduction.

        Modulo bias is negligible for the bounds used here (< 2**32) and,
        unlike rejection sampling, keeps the number of consumed draws a
        deterministic function of the call count alone.
        """
        if bound <= 0:
            raise ValueError("bound must be positive")
        return self.next_u64() % bound

    def next_batch(self, count: int) -> np.ndarray:
        """The next ``count`` draws as a uint64 array; advances the state."""
        if count < 0:
            raise ValueError("count must be non-negative")
        ks = np.arange(1, count + 1, dtype=np.uint64)
        states = np.uint64(self.state) + np.uint64(GOLDEN) * ks
        self.state = (self.state + GOLDEN * count) & MASK64
        return mix64_array(states)


def mix64_array(z: np.ndarray) -> np.ndarray:
    """Vectorized ``mix64`` over a uint64 array."""
    z = z.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= np.uint64(0xBF58476D1CE4E5B9)
    z ^= z >> np.uint64(27)
    z *= np.uint64(0x94D049BB133111EB)
    z ^= z >> np.uint64(31)
    return z
