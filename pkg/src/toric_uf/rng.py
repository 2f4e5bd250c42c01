"""Counter-based per-shot random streams.

Every shot draws from its own SplitMix64 stream whose starting state is a
pure function of ``(seed, shot_index)``::

    state_0 = mix64(seed XOR mix64(shot_index + GOLDEN))
    state_k = state_{k-1} + GOLDEN            (mod 2**64)
    output_k = mix64(state_k)

``mix64`` is the SplitMix64 finalizer. Because a stream never depends on
other shots, serial, threaded and compiled runs produce identical shots.
Uniform doubles use the top 53 bits and lie in ``(0, 1]``; bounded integers
use Lemire's multiply-shift on the top 32 bits. The compiled kernel
implements exactly the same arithmetic.
"""

from __future__ import annotations

import math

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_TWO_M53 = 2.0 ** -53


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def stream_state(seed: int, shot_index: int) -> int:
    return (seed ^ mix64(shot_index + GOLDEN)) & MASK64


class ShotStream:
    """SplitMix64 stream for one shot."""

    __slots__ = ("state",)

    def __init__(self, seed: int, shot_index: int):
        self.state = mix64(stream_state(seed, shot_index))

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)

    def uniform(self) -> float:
        return ((self.next_u64() >> 11) + 1) * _TWO_M53

    def below(self, n: int) -> int:
        return ((self.next_u64() >> 32) * n) >> 32


def geometric_hits(stream: ShotStream, n: int, q: float):
    """Yield the indices in ``range(n)`` hit by independent Bernoulli(q) trials.

    Uses geometric skipping, so the cost is proportional to the number of hits.
    """
    if q <= 0.0 or n <= 0:
        return
    log1mq = math.log1p(-q)
    pos = 0
    while True:
        skip = math.log(stream.uniform()) / log1mq
        if skip >= n - pos:
            return
        pos += int(skip)
        yield pos
        pos += 1
