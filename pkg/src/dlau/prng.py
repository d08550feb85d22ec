"""SplitMix64 generator used for every random stream in the package.

The recipe is pinned so that other implementations can reproduce the exact
same weights, inputs and RBM samples:

    state  <- seed (uint64)
    next():
        state <- state + 0x9E3779B97F4A7C15          (mod 2**64)
        z <- state
        z <- (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9    (mod 2**64)
        z <- (z ^ (z >> 27)) * 0x94D049BB133111EB    (mod 2**64)
        return z ^ (z >> 31)

Derived values:

    uniform_f32(): (next() >> 40) * 2**-24 - 0.5     in [-0.5, 0.5), exact in float32
    random():      (next() >> 11) * 2**-53           in [0, 1), float64

Because the state advances by a fixed increment, the i-th output (0-based) is
``mix(seed + (i + 1) * GAMMA)``, which lets blocks be generated vectorised.
"""

from __future__ import annotations

import numpy as np

MASK64 = 0xFFFF_FFFF_FFFF_FFFF
GAMMA = 0x9E37_79B9_7F4A_7C15
MIX1 = 0xBF58_476D_1CE4_E5B9
MIX2 = 0x94D0_49BB_1331_11EB

_GAMMA = np.uint64(GAMMA)
_MIX1 = np.uint64(MIX1)
_MIX2 = np.uint64(MIX2)


def _mix(z: np.ndarray) -> np.ndarray:
    # uint64 array arithmetic wraps mod 2**64 without warnings
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


class SplitMix64:
    """Stateful SplitMix64 stream. Draws are consumed in call order."""

    def __init__(self, seed: int):
        if seed < 0:
            raise ValueError(f"seed must be non-negative, got {seed}")
        self.state = seed & MASK64

    def next_u64(self) -> int:
        return int(self.next_block(1)[0])

    def next_block(self, n: int) -> np.ndarray:
        """Return the next ``n`` raw outputs as a uint64 array."""
        if n < 0:
            raise ValueError(f"n must be non-negative, got {n}")
        steps = np.arange(1, n + 1, dtype=np.uint64)
        out = _mix(np.uint64(self.state) + steps * _GAMMA)
        self.state = (self.state + n * GAMMA) & MASK64
        return out

    def random(self, n: int) -> np.ndarray:
        """``n`` float64 draws in [0, 1)."""
        return (self.next_block(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def uniform_f32(self, n: int) -> np.ndarray:
        """``n`` float32 draws in [-0.5, 0.5) with 24 significant bits."""
        top = (self.next_block(n) >> np.uint64(40)).astype(np.float64)
        return (top * 2.0**-24 - 0.5).astype(np.float32)
