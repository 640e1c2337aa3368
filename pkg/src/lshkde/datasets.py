"""Seeded synthetic datasets covering distinct density regimes.

Four generators: an isotropic Gaussian cluster, a two-cluster mixture,
a uniform cube, and collinear points (the adversarial case for projection
hashing).  All are deterministic in their seed.
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError


def gaussian_cluster(n, d, seed=0, scale=1.0):
    rng = np.random.default_rng(seed)
    return rng.normal(0.0, scale, size=(n, d))


def two_clusters(n, d, seed=0, separation=6.0, scale=1.0):
    """Two equal Gaussian clusters whose centers are ``separation`` apart."""
    rng = np.random.default_rng(seed)
    X = rng.normal(0.0, scale, size=(n, d))
    offset = np.full(d, separation / np.sqrt(d))
    X[n // 2:] += offset
    return X


def uniform_cube(n, d, seed=0, side=4.0):
    rng = np.random.default_rng(seed)
    return rng.uniform(-side / 2.0, side / 2.0, size=(n, d))


def line(n, d, seed=0, spacing=1.0):
    """Evenly spaced points along the first axis, with a fixed random
    orientation-free layout; worst case for bucket hashing."""
    X = np.zeros((n, d))
    X[:, 0] = np.arange(n) * spacing
    rng = np.random.default_rng(seed)
    X += rng.normal(0.0, 1e-9, size=(n, d))  # break exact ties only
    return X


GENERATORS = {
    "gaussian_cluster": gaussian_cluster,
    "two_clusters": two_clusters,
    "uniform_cube": uniform_cube,
    "line": line,
}


def make_dataset(name, n, d, seed=0, **kwargs):
    if name not in GENERATORS:
        raise ParameterError(f"unknown dataset generator {name!r}")
    return GENERATORS[name](n, d, seed=seed, **kwargs)
