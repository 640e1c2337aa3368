"""Euclidean LSH tables with concatenation, repetition, and point replacement.

One ``LshTable`` holds L independent hash tables.  Table l hashes a point
through k Gaussian-projection atoms h(x) = floor((<g, x> + b) / w); the k
atom outputs are folded into a single 64-bit bucket key by an iterated
splitmix64 chain (see ``rng``).  Mixer collisions merely add false
candidates to a bucket; they can never lose a point.

Buckets are ascending lists of point indices, so iteration order, recovery
output, and equality comparisons are all deterministic.  Concurrency
contract: ``recover`` and ``hash_keys`` are safe to call concurrently;
``build`` and ``update`` require exclusive access.  No internal locking.
"""

from __future__ import annotations

from bisect import bisect_left, insort

import numpy as np

from .errors import ConsistencyError, ParameterError
from .rng import _FNV_OFFSET, philox_generator, splitmix64_array


def combine_atom_keys(atoms: np.ndarray) -> np.ndarray:
    """Fold int64 atom outputs along the last axis into uint64 bucket keys."""
    u = np.ascontiguousarray(atoms, dtype=np.int64).view(np.uint64)
    h = np.full(u.shape[:-1], _FNV_OFFSET, dtype=np.uint64)
    for j in range(u.shape[-1]):
        h = splitmix64_array(h ^ u[..., j])
    return h


class LshTable:
    """L repetitions of k concatenated Gaussian-projection hash atoms.

    All projection vectors and offsets derive from ``seed`` alone, so two
    tables built with equal (k, num_tables, near_distance, dim, seed,
    bucket_width_factor) hash identically regardless of contents.
    """

    def __init__(self, k, num_tables, near_distance, dim, seed,
                 bucket_width_factor=1.5):
        if k < 1 or num_tables < 1:
            raise ParameterError("k and num_tables must be at least 1")
        if not (near_distance > 0):
            raise ParameterError("near_distance must be positive")
        if dim < 1:
            raise ParameterError("dim must be at least 1")
        self.k = int(k)
        self.num_tables = int(num_tables)
        self.near_distance = float(near_distance)
        self.dim = int(dim)
        self.seed = int(seed)
        self.width = float(bucket_width_factor) * self.near_distance

        gen = philox_generator(self.seed)
        L = self.num_tables
        self._proj = gen.standard_normal((L * self.k, self.dim))
        self._offsets = gen.uniform(0.0, self.width, size=L * self.k)
        # One bucket map per repetition: uint64 key -> ascending index list.
        self.tables = [dict() for _ in range(L)]

    # ------------------------------------------------------------------
    # hashing
    # ------------------------------------------------------------------

    def hash_keys(self, x: np.ndarray) -> np.ndarray:
        """Bucket keys of one point, one uint64 per repetition."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dim,):
            raise ParameterError(f"point must have dimension {self.dim}")
        atoms = np.floor((self._proj @ x + self._offsets) / self.width)
        return combine_atom_keys(atoms.astype(np.int64).reshape(self.num_tables, self.k))

    def _hash_many(self, points: np.ndarray) -> np.ndarray:
        atoms = np.floor((points @ self._proj.T + self._offsets) / self.width)
        atoms = atoms.astype(np.int64).reshape(len(points), self.num_tables, self.k)
        return combine_atom_keys(atoms)  # (m, L)

    # ------------------------------------------------------------------
    # construction and maintenance
    # ------------------------------------------------------------------

    def build(self, points: np.ndarray, indices) -> "LshTable":
        """Insert ``points`` (rows) under the given point indices.

        Every index lands in exactly one bucket of each repetition.  An
        empty point set is a valid table.
        """
        points = np.asarray(points, dtype=np.float64).reshape(-1, self.dim)
        indices = np.asarray(indices, dtype=np.int64)
        if len(points) != len(indices):
            raise ParameterError("points and indices must have equal length")
        if len(points) == 0:
            return self
        order = np.argsort(indices, kind="stable")
        points, indices = points[order], indices[order]
        keys = self._hash_many(points)
        for l in range(self.num_tables):
            table = self.tables[l]
            col = keys[:, l]
            for key, idx in zip(col.tolist(), indices.tolist()):
                bucket = table.get(key)
                if bucket is None:
                    table[key] = [idx]
                else:
                    bucket.append(idx)  # ascending input order keeps buckets sorted
        return self

    def update(self, new_point: np.ndarray, old_point: np.ndarray, index: int):
        """Move ``index`` from the buckets of ``old_point`` to those of
        ``new_point`` in every repetition.

        Raises ``ConsistencyError`` if the index is not where the old point
        hashes, which signals that the caller's dataset and this table have
        diverged.
        """
        old_keys = self.hash_keys(old_point)
        new_keys = self.hash_keys(new_point)
        index = int(index)
        for l in range(self.num_tables):
            okey, nkey = int(old_keys[l]), int(new_keys[l])
            table = self.tables[l]
            bucket = table.get(okey)
            if bucket is None:
                raise ConsistencyError(f"index {index} missing from table {l}")
            pos = bisect_left(bucket, index)
            if pos == len(bucket) or bucket[pos] != index:
                raise ConsistencyError(f"index {index} missing from table {l}")
            if okey == nkey:
                continue
            del bucket[pos]
            if not bucket:
                del table[okey]
            dest = table.get(nkey)
            if dest is None:
                table[nkey] = [index]
            else:
                insort(dest, index)

    # ------------------------------------------------------------------
    # queries
    # ------------------------------------------------------------------

    def recover(self, q: np.ndarray) -> np.ndarray:
        """Deduplicated, ascending indices found in q's bucket of any
        repetition."""
        found = set()
        for l, key in enumerate(self.hash_keys(q).tolist()):
            bucket = self.tables[l].get(key)
            if bucket:
                found.update(bucket)
        return np.array(sorted(found), dtype=np.int64)

    def recover_per_table(self, q: np.ndarray) -> list:
        """Bucket contents of q per repetition, before deduplication."""
        out = []
        for l, key in enumerate(self.hash_keys(q).tolist()):
            bucket = self.tables[l].get(key)
            out.append(list(bucket) if bucket else [])
        return out

    def stored_count(self) -> int:
        """Number of stored indices (identical across repetitions)."""
        return sum(len(b) for b in self.tables[0].values())
