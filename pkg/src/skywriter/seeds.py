"""Deterministic 64-bit seed derivation.

Every component that needs per-item randomness (one synthetic gesture, one
tree in the forest, one CV fold) derives its own seed from a root seed plus
integer coordinates, so items are independent and the whole pipeline is
reproducible regardless of evaluation order.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def _splitmix64(z: int) -> int:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK
    return z ^ (z >> 31)


def mix_seed(seed: int, *indices: int) -> int:
    """Fold integer coordinates into a root seed (splitmix64 finalizer per step).

    mix_seed(s) != s in general; each extra index produces an unrelated stream.
    """
    z = seed & _MASK
    for ix in indices:
        z = _splitmix64((z + _GAMMA + (int(ix) & _MASK)) & _MASK)
    return _splitmix64((z + _GAMMA) & _MASK)
