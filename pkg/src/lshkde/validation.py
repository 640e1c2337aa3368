"""Input validation helpers for the estimator surfaces."""

from __future__ import annotations

import numpy as np

from .errors import ParameterError


def check_points(X, dim=None) -> np.ndarray:
    """Coerce X to a finite float64 matrix of shape (n, dim)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise ParameterError("points must form a nonempty 2-D array")
    if dim is not None and X.shape[1] != dim:
        raise ParameterError(f"points must have dimension {dim}, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise ParameterError("points must be finite")
    return np.ascontiguousarray(X)


def check_vector(q, dim) -> np.ndarray:
    """Coerce q to a finite float64 vector of length ``dim``."""
    q = np.asarray(q, dtype=np.float64).reshape(-1)
    if q.shape != (dim,):
        raise ParameterError(f"query must have dimension {dim}, got {q.shape[0]}")
    if not np.all(np.isfinite(q)):
        raise ParameterError("query must be finite")
    return q
