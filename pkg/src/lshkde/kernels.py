"""Radial decreasing kernels with closed-form inversion.

Two kernel families are supported, both mapping a nonnegative distance to a
weight in [0, 1] with value exactly 1 at distance 0:

* ``gaussian``:     w = exp(-(dist / bandwidth)^2)
* ``exponential``:  w = exp(-dist / bandwidth)

Both admit a closed-form inverse (distance at which a given weight is
attained), which is what sizes the geometric weight levels.  Kernels without
a closed-form inverse are deliberately out of scope: no numeric root finder
is shipped.

Weight levels: level r (r = 1, 2, ...) is the half-open weight interval
(2^-r, 2^-(r-1)].  ``weight_level_of`` assigns weights to levels exactly,
using the binary exponent of the float rather than a logarithm, so interval
endpoints are classified without rounding ambiguity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

KERNEL_KINDS = ("gaussian", "exponential")


@dataclass(frozen=True)
class KernelSpec:
    """A radial, strictly decreasing, Lipschitz kernel.

    Parameters
    ----------
    kind : str
        One of ``"gaussian"`` or ``"exponential"``.
    bandwidth : float
        Positive distance scale.

    Attributes
    ----------
    lipschitz_const : float
        An upper bound on the magnitude of the kernel's derivative with
        respect to distance, hence a Lipschitz constant for the kernel and
        (by averaging) for any KDE built from it.
    """

    kind: str
    bandwidth: float
    lipschitz_const: float = field(init=False)

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ParameterError(f"unknown kernel kind {self.kind!r}")
        if not (self.bandwidth > 0):
            raise ParameterError("bandwidth must be positive")
        if self.kind == "gaussian":
            # |d/dz exp(-(z/b)^2)| peaks at z = b/sqrt(2).
            lip = math.sqrt(2.0) * math.exp(-0.5) / self.bandwidth
        else:
            # |d/dz exp(-z/b)| peaks at z = 0.
            lip = 1.0 / self.bandwidth
        object.__setattr__(self, "lipschitz_const", lip)

    def eval(self, dist: float) -> float:
        """Kernel weight at a single nonnegative distance."""
        if dist < 0:
            raise ParameterError("dist must be nonnegative")
        if self.kind == "gaussian":
            return math.exp(-((dist / self.bandwidth) ** 2))
        return math.exp(-dist / self.bandwidth)

    def eval_many(self, dists: np.ndarray) -> np.ndarray:
        """Vectorized ``eval`` over an array of nonnegative distances."""
        z = np.asarray(dists, dtype=np.float64) / self.bandwidth
        if self.kind == "gaussian":
            return np.exp(-(z * z))
        return np.exp(-z)

    def invert(self, weight: float) -> float:
        """Distance at which the kernel attains ``weight``.

        Inverse of ``eval``: ``eval(invert(w)) == w`` up to floating
        rounding, for ``weight`` in (0, 1].
        """
        if not (0.0 < weight <= 1.0):
            raise ParameterError("weight must lie in (0, 1]")
        if self.kind == "gaussian":
            return self.bandwidth * math.sqrt(math.log(1.0 / weight))
        return self.bandwidth * math.log(1.0 / weight)


def make_kernel(kind: str, bandwidth: float) -> KernelSpec:
    return KernelSpec(kind=kind, bandwidth=float(bandwidth))


def weight_level_of(weight: float, R: int) -> int:
    """Level index in [1, R+1] of a kernel weight.

    Level r <= R holds weights in (2^-r, 2^-(r-1)]; everything at or below
    2^-R (including 0) falls to the tail level R+1.
    """
    if not (0.0 <= weight <= 1.0):
        raise ParameterError("weight must lie in [0, 1]")
    if weight == 0.0:
        return R + 1
    m, e = math.frexp(weight)  # weight = m * 2**e, m in [0.5, 1)
    r = (1 - e) + (1 if m == 0.5 else 0)
    return r if r <= R else R + 1


def weight_levels_of(weights: np.ndarray, R: int) -> np.ndarray:
    """Vectorized ``weight_level_of``; input values must lie in [0, 1]."""
    w = np.asarray(weights, dtype=np.float64)
    m, e = np.frexp(w)
    r = (1 - e) + (m == 0.5)
    r = np.where(w == 0.0, R + 1, r)
    return np.minimum(r, R + 1).astype(np.int64)
