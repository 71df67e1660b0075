"""Counter-based random numbers for reproducible masks.

Every draw is the ``index``-th output of SplitMix64 seeded with ``seed``::

    state_n = seed + (n + 1) * 0x9E3779B97F4A7C15   (mod 2**64)
    out_n   = mix(state_n)

so any single draw can be recomputed from ``(seed, index)`` without replaying
the stream. Uniform floats take the top 53 bits: ``(out >> 11) * 2**-53``.
"""

import numpy as np

GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_MASK64 = (1 << 64) - 1


def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def splitmix64(seed, index):
    """Raw 64-bit outputs for an array (or scalar) of stream indices."""
    idx = np.asarray(index, dtype=np.uint64)
    s = np.uint64(int(seed) & _MASK64)
    with np.errstate(over="ignore"):
        state = s + (idx + np.uint64(1)) * np.uint64(GAMMA)
        return _mix(state)


def uniform(seed, index):
    """Floats in [0, 1) for the given stream indices."""
    bits = splitmix64(seed, index) >> np.uint64(11)
    return bits.astype(np.float64) * (2.0 ** -53)


def bernoulli(seed, index, p):
    """True with probability ``p``; exact at p=0 (never) and p=1 (always)."""
    return uniform(seed, index) < p
