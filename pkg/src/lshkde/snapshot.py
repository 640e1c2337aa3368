"""Versioned binary snapshots of a fitted estimator.

Layout (all integers little-endian): an 8-byte magic, a u32 format version,
the constructor parameters, the dataset, and then per group the tail sample
plus, per level, the sampled index set and every repetition's bucket map.
Buckets are written in ascending key order and indices in ascending order,
so serialization is canonical: equal structures produce equal bytes.

Hash atoms are not stored; they re-derive from the seed on load, exactly as
``fit`` derives them.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import ConsistencyError, ParameterError
from .estimator import DynamicKernelDensity, _Group, _LevelSlot
from .kernels import KERNEL_KINDS, make_kernel
from .collision import CollisionModel
from .levels import build_level_schedule
from .lsh import LshTable
from .rng import TAG_HASH_ATOMS, mix64

MAGIC = b"LSHKDE\x00\x01"
VERSION = 1
_MASK64 = (1 << 64) - 1


def _pack_indices(out: bytearray, indices):
    arr = np.asarray(indices, dtype="<u8")
    out += struct.pack("<I", len(arr))
    out += arr.tobytes()


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def unpack(self, fmt: str):
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.data):
            raise ParameterError("snapshot truncated")
        values = struct.unpack_from(fmt, self.data, self.pos)
        self.pos += size
        return values

    def array(self, dtype, count):
        dtype = np.dtype(dtype)
        size = dtype.itemsize * count
        if self.pos + size > len(self.data):
            raise ParameterError("snapshot truncated")
        arr = np.frombuffer(self.data, dtype=dtype, count=count, offset=self.pos)
        self.pos += size
        return arr

    def indices(self):
        (count,) = self.unpack("<I")
        return self.array("<u8", count).astype(np.int64)


def save_snapshot(est: DynamicKernelDensity, path):
    """Write a fitted estimator to ``path``."""
    est._check_fitted()
    if not (0 <= int(est.seed) <= _MASK64):
        raise ParameterError("snapshot seeds must fit in 64 bits")
    out = bytearray()
    out += MAGIC
    out += struct.pack("<I", VERSION)
    out += struct.pack("<B", KERNEL_KINDS.index(est.kernel))
    out += struct.pack(
        "<6d", est.bandwidth, est.epsilon, est.f_kde, est.group_scale,
        est.table_scale, est.level_slack)
    out += struct.pack("<d", est.bucket_width_factor)
    out += struct.pack("<3I", int(est.median_blocks), int(est.max_levels),
                       int(est.max_tables))
    out += struct.pack("<Q", int(est.seed))
    out += struct.pack("<QIIIQ", est.n_, est.d_, est.K1_, est.schedule_.R,
                       est.update_count_)
    out += np.ascontiguousarray(est.X_, dtype="<f8").tobytes()
    for group in est.groups_:
        _pack_indices(out, group.tail_indices)
        for slot in group.levels:
            _pack_indices(out, slot.indices)
            out += struct.pack("<I", slot.table.num_tables)
            for table in slot.table.tables:
                out += struct.pack("<I", len(table))
                for key in sorted(table):
                    bucket = table[key]
                    out += struct.pack("<QI", key, len(bucket))
                    out += np.asarray(bucket, dtype="<u8").tobytes()
    with open(path, "wb") as fh:
        fh.write(bytes(out))


def load_snapshot(path) -> DynamicKernelDensity:
    """Reconstruct a fitted estimator from a snapshot.

    The schedule, group count, and hash atoms are re-derived from the
    stored parameters; stored structural sizes must agree or the file is
    rejected as inconsistent.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] != MAGIC:
        raise ParameterError(f"{path}: not a snapshot file")
    reader = _Reader(data)
    reader.pos = 8
    (version,) = reader.unpack("<I")
    if version != VERSION:
        raise ParameterError(f"{path}: unsupported snapshot version {version}")
    (kind_idx,) = reader.unpack("<B")
    if kind_idx >= len(KERNEL_KINDS):
        raise ParameterError(f"{path}: unknown kernel id {kind_idx}")
    bandwidth, epsilon, f_kde, group_scale, table_scale, level_slack = reader.unpack("<6d")
    (bucket_width_factor,) = reader.unpack("<d")
    median_blocks, max_levels, max_tables = reader.unpack("<3I")
    (seed,) = reader.unpack("<Q")
    n, d, K1, R, update_count = reader.unpack("<QIIIQ")

    est = DynamicKernelDensity(
        kernel=KERNEL_KINDS[kind_idx], bandwidth=bandwidth, epsilon=epsilon,
        f_kde=f_kde, seed=seed, group_scale=group_scale,
        table_scale=table_scale, level_slack=level_slack,
        bucket_width_factor=bucket_width_factor, median_blocks=median_blocks,
        max_levels=max_levels, max_tables=max_tables)
    est.X_ = reader.array("<f8", n * d).astype(np.float64).reshape(n, d).copy()
    est.n_, est.d_ = int(n), int(d)
    est.kernel_spec_ = make_kernel(est.kernel, bandwidth)
    est.collision_model_ = CollisionModel(bucket_width_factor)
    est.schedule_ = build_level_schedule(
        est.kernel_spec_, int(n), f_kde, est.collision_model_,
        slack=level_slack, table_scale=table_scale,
        max_levels=max_levels, max_tables=max_tables)
    if est.schedule_.R != R:
        raise ConsistencyError(f"{path}: stored R={R}, derived {est.schedule_.R}")
    import math

    est.K1_ = max(1, math.ceil(group_scale * epsilon**-2 * math.log(int(n))))
    if est.K1_ != K1:
        raise ConsistencyError(f"{path}: stored K1={K1}, derived {est.K1_}")
    est.update_count_ = int(update_count)

    sched = est.schedule_
    est.groups_ = []
    for a in range(K1):
        group = _Group()
        group.tail_indices = reader.indices()
        for r in range(1, R + 1):
            idx = reader.indices()
            table = LshTable(
                k=int(sched.k[r - 1]), num_tables=int(sched.K2[r - 1]),
                near_distance=float(sched.z[r - 1]), dim=int(d),
                seed=mix64(seed, TAG_HASH_ATOMS, a, r),
                bucket_width_factor=bucket_width_factor)
            (L,) = reader.unpack("<I")
            if L != table.num_tables:
                raise ConsistencyError(
                    f"{path}: stored {L} tables at level {r}, derived {table.num_tables}")
            for l in range(L):
                (bucket_count,) = reader.unpack("<I")
                for _ in range(bucket_count):
                    key, size = reader.unpack("<QI")
                    table.tables[l][key] = reader.array("<u8", size).astype(np.int64).tolist()
            group.levels.append(
                _LevelSlot(indices=idx, table=table, rate=sched.sampling_rate(r)))
        est.groups_.append(group)
    if reader.pos != len(data):
        raise ParameterError(f"{path}: trailing bytes after snapshot payload")
    return est
