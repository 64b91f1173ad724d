"""Counter-based pseudo-random streams shared by the permutation kernels and the
synthetic-world sampler.

Every random draw in this package is a pure function of (stream key, counter),
with the key derived from the user-facing seed plus a textual stream label.
That makes outputs independent of worker count and execution order, and lets
the compiled kernel and the numpy fallback produce identical bit streams.

The generator is the SplitMix64 output function applied to key + (ctr+1)*GAMMA.
"""

from __future__ import annotations

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15

_G = np.uint64(GAMMA)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = np.float64(2.0 ** -53)


def mix64(x: int) -> int:
    """SplitMix64 finalizer on a python int (exact, masked to 64 bits)."""
    z = x & MASK64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & MASK64
    z ^= z >> 31
    return z


def u64_at(key: int, ctr: int) -> int:
    """The ctr-th 64-bit word of the stream identified by key."""
    return mix64((key + (ctr + 1) * GAMMA) & MASK64)


def u64_block(key: int, ctrs: np.ndarray) -> np.ndarray:
    """Vectorized u64_at over an array of counters. Returns uint64 array."""
    z = np.uint64(key) + (ctrs.astype(np.uint64) + np.uint64(1)) * _G
    z ^= z >> _S30
    z *= _M1
    z ^= z >> _S27
    z *= _M2
    z ^= z >> _S31
    return z


def uniform01(words: np.ndarray) -> np.ndarray:
    """Map uint64 words to float64 in [0, 1) using the top 53 bits."""
    return (words >> _S11).astype(np.float64) * _INV53


def derive_key(seed: int, *parts: str) -> int:
    """Derive a 64-bit substream key from the master seed and a textual label.

    blake2b keeps the derivation stable across processes and platforms
    (python's hash() is salted per process and unusable here).
    """
    msg = ("%d|" % seed + "|".join(parts)).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(msg, digest_size=8).digest(), "little")
