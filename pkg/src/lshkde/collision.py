"""Collision-probability model for Gaussian-projection bucket hashing.

For one hash atom h(x) = floor((<g, x> + b) / w) with g standard normal and
b uniform on [0, w), two points at Euclidean distance ``dist`` collide with
probability

    p(s) = 1 - 2*Phi(-1/s) - (2*s / sqrt(2*pi)) * (1 - exp(-1/(2*s^2)))

where s = dist / w and Phi is the standard normal CDF.  The model owns the
bucket-width rule w = bucket_width_factor * near_distance, so every consumer
(table sizing, recovery predictions, statistical tests) prices collisions
identically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import ParameterError


@dataclass(frozen=True)
class CollisionModel:
    """Collision curve of one hash atom, parameterized by bucket width.

    ``bucket_width_factor`` sets w relative to the near radius a table is
    built for; 1.5 puts the near-collision probability around 0.5, keeping
    concatenation depths small at moderate scale.
    """

    bucket_width_factor: float = 1.5

    def __post_init__(self):
        if not (self.bucket_width_factor > 0):
            raise ParameterError("bucket_width_factor must be positive")

    def prob(self, s):
        """Collision probability at normalized distance s = dist / w.

        Accepts scalars or arrays; s = 0 maps to exactly 1.
        """
        s = np.asarray(s, dtype=np.float64)
        out = np.ones_like(s)
        pos = s > 0
        sp = s[pos]
        out[pos] = (
            1.0
            - 2.0 * ndtr(-1.0 / sp)
            - (2.0 * sp / np.sqrt(2.0 * np.pi)) * (1.0 - np.exp(-1.0 / (2.0 * sp * sp)))
        )
        if out.ndim == 0:
            return float(out)
        return out

    def bucket_width(self, near_distance: float) -> float:
        if not (near_distance > 0):
            raise ParameterError("near_distance must be positive")
        return self.bucket_width_factor * near_distance

    def prob_at(self, dist: float, near_distance: float):
        """Collision probability of one atom at ``dist``, for a table whose
        bucket width was set from ``near_distance``."""
        w = self.bucket_width(near_distance)
        return self.prob(np.asarray(dist, dtype=np.float64) / w)

    def p_near(self, near_distance: float) -> float:
        """Atom collision probability at the near radius itself."""
        return float(self.prob_at(near_distance, near_distance))
