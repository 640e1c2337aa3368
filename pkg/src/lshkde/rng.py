"""Deterministic, keyed randomness.

Every random draw in the package derives from a 64-bit master seed through
one of two named constructions:

* ``mix64`` / ``keyed_uniform01`` -- a splitmix64 chain.  Used wherever one
  decision per (seed, path, index) tuple is needed, e.g. per-index Bernoulli
  sampling, so that membership can be re-derived and audited without
  replaying any stream.
* ``philox_generator`` -- a numpy Philox counter-based generator keyed by a
  mix64 of the derivation path.  Used for bulk draws (projection vectors,
  offsets) where a stream is convenient.

Both are stable across runs and platforms for a fixed numpy version, which
is what the update-versus-rebuild equivalence tests rely on.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_FNV_OFFSET = 0xCBF29CE484222325


def splitmix64(x: int) -> int:
    """One splitmix64 finalization step on a 64-bit integer."""
    z = (x + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def mix64(*parts: int) -> int:
    """Fold integers into one 64-bit key via an iterated splitmix64 chain."""
    h = _FNV_OFFSET
    for p in parts:
        h = splitmix64(h ^ (p & _MASK64))
    return h


def splitmix64_array(x: np.ndarray) -> np.ndarray:
    """Vectorized splitmix64 finalization over a uint64 array."""
    z = (x + np.uint64(_GOLDEN)).astype(np.uint64)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def keyed_uniform01(key: int, indices: np.ndarray) -> np.ndarray:
    """Uniform [0, 1) variates addressed by (key, index), order-free.

    The variate at index i depends only on (key, i); it is unaffected by
    which other indices are evaluated or in what order.
    """
    idx = np.asarray(indices, dtype=np.uint64)
    h = splitmix64_array(np.uint64(key) ^ (idx * np.uint64(_GOLDEN)))
    return (h >> np.uint64(11)).astype(np.float64) * 2.0 ** -53


def philox_generator(*path: int) -> np.random.Generator:
    """Generator for bulk draws, keyed by the mix64 of the derivation path."""
    return np.random.Generator(np.random.Philox(key=mix64(*path)))


# Derivation-path tags. Fixed for the life of the snapshot format.
TAG_LEVEL_SAMPLE = 0x4C45
TAG_TAIL_SAMPLE = 0x5441
TAG_HASH_ATOMS = 0x4841
TAG_MEMBER = 0x4D45
