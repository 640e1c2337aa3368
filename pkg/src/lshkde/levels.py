"""Geometric weight levels and the per-level hashing schedule.

Given a density floor ``f_kde``, weights are banded into R = ceil(log2(1 /
f_kde)) levels plus a tail.  Each level r gets a distance level z_r (the
distance at which the kernel weight is 2^-r), and the schedule derives, per
level, the concatenation depth k_r and table count K2_r that make a level-r
table recover its own level's points reliably while keeping deeper levels'
points out of the buckets.

The c_{i,r} ratios compare distance levels pairwise and are capped at
log2(n)^(1/7); the cap is what keeps k_r bounded when levels crowd together.
``slack`` multiplies the c terms wherever a vanishing correction factor
would appear asymptotically, and is exposed so the k_r / K2_r trade-off can
be measured rather than assumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .collision import CollisionModel
from .errors import CapacityError, ParameterError
from .kernels import KernelSpec


@dataclass(frozen=True)
class LevelSchedule:
    """Sizing of the level structure for one (kernel, n, f_kde) triple.

    ``z`` has R+1 entries: distance levels z_1..z_R followed by the tail
    boundary z_{R+1}.  ``c[r-1][j]`` is c_{i,r} for i = r+1+j, i up to R+1.
    ``k``, ``K2`` and ``p_near`` have one entry per level r in [1, R].
    """

    n: int
    f_kde: float
    R: int
    z: np.ndarray
    c: list
    k: np.ndarray
    K2: np.ndarray
    p_near: np.ndarray

    def c_of(self, i: int, r: int) -> float:
        """c_{i,r} for 1 <= r < i <= R+1."""
        if not (1 <= r < i <= self.R + 1):
            raise ParameterError(f"c_({i},{r}) is outside the schedule")
        return float(self.c[r - 1][i - r - 1])

    def sampling_rate(self, r: int) -> float:
        """Bernoulli rate min{1 / (2^r * n * f_kde), 1} for level r <= R,
        and the uniform tail rate 1/n for r = R+1."""
        if not (1 <= r <= self.R + 1):
            raise ParameterError("level out of range")
        if r == self.R + 1:
            return 1.0 / self.n
        return min(1.0 / (2.0**r * self.n * self.f_kde), 1.0)

    def sampling_rates(self) -> np.ndarray:
        return np.array([self.sampling_rate(r) for r in range(1, self.R + 1)])


def _ratio_cap(n: int) -> float:
    # log2(n)^(1/7), floored at 1 so tiny datasets stay well defined.
    return max(1.0, math.log2(max(n, 2))) ** (1.0 / 7.0)


def build_level_schedule(
    kernel: KernelSpec,
    n: int,
    f_kde: float,
    collision_model: CollisionModel,
    slack: float = 1.0,
    table_scale: float = 3.0,
    max_levels: int = 64,
    max_tables: int = 4096,
) -> LevelSchedule:
    """Derive the full level schedule.

    Parameters
    ----------
    slack : float in (0, 1]
        Multiplier on the c terms in the k_r exponent budget.
    table_scale : float
        Multiplier on ln(n) in the table count K2_r.
    max_levels : int
        Cap on R; exceeding it raises ``CapacityError``.
    max_tables : int
        Hard cap on any K2_r.
    """
    if n < 1:
        raise ParameterError("n must be at least 1")
    if not (0.0 < f_kde < 1.0):
        raise ParameterError("f_kde must lie in (0, 1)")
    if not (0.0 < slack <= 1.0):
        raise ParameterError("slack must lie in (0, 1]")
    if table_scale <= 0:
        raise ParameterError("table_scale must be positive")

    R = math.ceil(math.log2(1.0 / f_kde))
    if R > max_levels:
        raise CapacityError(f"f_kde={f_kde} needs R={R} levels; cap is {max_levels}")

    z = np.array([kernel.invert(2.0 ** -(r + 1)) for r in range(R + 1)])
    cap = _ratio_cap(n)
    ratios = []
    for r in range(1, R + 1):
        row = np.minimum(z[r - 1 : R] / z[r - 1], cap)  # z_{i-1}/z_r, i = r+1..R+1
        ratios.append(row)

    log_n = math.log(max(n, 2))
    k = np.empty(R, dtype=np.int64)
    K2 = np.empty(R, dtype=np.int64)
    p_near = np.empty(R)
    for r in range(1, R + 1):
        p = collision_model.p_near(float(z[r - 1]))
        p_near[r - 1] = p
        steps = np.arange(1, R + 2 - r)  # i - r for i = r+1..R+1
        budget = int(np.max(np.ceil(steps / (slack * ratios[r - 1] ** 2))))
        k[r - 1] = max(1, math.ceil(budget * math.log(2.0) / math.log(1.0 / p)))
        raw = math.ceil(table_scale * log_n * p ** -float(k[r - 1]))
        K2[r - 1] = min(max_tables, max(1, raw))

    return LevelSchedule(
        n=n, f_kde=f_kde, R=R, z=z, c=ratios, k=k, K2=K2, p_near=p_near
    )


def kernel_cost(schedule: LevelSchedule, slack: float = 1.0) -> float:
    """Size-scaling factor of the schedule: max over levels r of
    2^(max_i ceil((i - r) / (slack * c_{i,r}))).

    Reporting only; nothing in the structure branches on it.
    """
    worst = 0
    for r in range(1, schedule.R + 1):
        steps = np.arange(1, schedule.R + 2 - r)
        expo = int(np.max(np.ceil(steps / (slack * schedule.c[r - 1]))))
        worst = max(worst, expo)
    return 2.0**worst
