"""CSV ingestion and result emission.

Point files: one point per line, coordinates as decimal floats separated by
commas.  A header line is tolerated and auto-detected by a non-numeric
first token.  Dimension is inferred from the first data row and enforced
afterwards; a malformed row raises ``ParameterError`` naming its line
number.  Update files use the same rules with the first column holding the
integer slot index.
"""

from __future__ import annotations

import csv

import numpy as np

from .errors import ParameterError


def _is_number(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


def _read_rows(path):
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            row = [cell.strip() for cell in row if cell.strip() != ""]
            if not row:
                continue
            if lineno == 1 and not _is_number(row[0]):
                continue  # header
            yield lineno, row


def read_points_csv(path) -> np.ndarray:
    """Read a point-per-line CSV into an (n, d) float array."""
    points = []
    dim = None
    for lineno, row in _read_rows(path):
        try:
            values = [float(cell) for cell in row]
        except ValueError as exc:
            raise ParameterError(f"{path}:{lineno}: {exc}") from None
        if dim is None:
            dim = len(values)
        elif len(values) != dim:
            raise ParameterError(
                f"{path}:{lineno}: expected {dim} coordinates, got {len(values)}")
        points.append(values)
    if not points:
        raise ParameterError(f"{path}: no data rows")
    return np.array(points, dtype=np.float64)


def read_updates_csv(path, dim: int, n: int):
    """Read (index, new point) rows; validates index range and dimension."""
    updates = []
    for lineno, row in _read_rows(path):
        try:
            idx = int(float(row[0]))
            values = [float(cell) for cell in row[1:]]
        except ValueError as exc:
            raise ParameterError(f"{path}:{lineno}: {exc}") from None
        if len(values) != dim:
            raise ParameterError(
                f"{path}:{lineno}: expected {dim} coordinates, got {len(values)}")
        if not (0 <= idx < n):
            raise ParameterError(f"{path}:{lineno}: index {idx} out of range")
        updates.append((idx, np.array(values)))
    return updates


def write_results_csv(path, rows, with_oracle: bool):
    """One row per query: estimate, optional exact/relative error,
    candidates examined, and the per-level hit histogram."""
    header = ["estimate"]
    if with_oracle:
        header += ["exact", "relative_error"]
    header += ["candidates_examined", "levels_hit"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            out = [repr(row["estimate"])]
            if with_oracle:
                out += [repr(row["exact"]), repr(row["relative_error"])]
            out += [row["candidates_examined"],
                    ";".join(str(int(c)) for c in row["levels_hit"])]
            writer.writerow(out)
