"""CSV formats for point clouds and history ledgers.

Point files: header ``dim0,dim1,...,dim{N-1}`` then one row per point.
Ledger files: same, with a leading ``index`` column holding the emission
index (1-based, consecutive).  Floats are serialized with ``repr``, the
shortest round-trip representation, so values survive a write/read cycle
bit for bit.

Ledger writes go through a temp file in the same directory followed by an
atomic rename: an interrupted run can never leave a partial row behind.
"""

from __future__ import annotations

import csv
import os
import tempfile

import numpy as np


class PointFileError(ValueError):
    """A points or ledger CSV that cannot be parsed; message names the row."""


def _parse_row(raw, path, line_no, width):
    if len(raw) != width:
        raise PointFileError(
            f"{path}: row {line_no} has {len(raw)} columns, expected {width}"
        )
    try:
        return [float(v) for v in raw]
    except ValueError as exc:
        raise PointFileError(f"{path}: row {line_no}: {exc}") from None


def _is_header(raw) -> bool:
    for cell in raw:
        try:
            float(cell)
        except ValueError:
            return True
    return False


def write_points_csv(path, points: np.ndarray) -> None:
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"dim{d}" for d in range(points.shape[1])])
        for row in points:
            writer.writerow([repr(float(v)) for v in row])


def read_points_csv(path) -> np.ndarray:
    """Read a point file; a non-numeric first row is treated as a header."""
    rows = []
    width = None
    with open(path, newline="") as fh:
        for line_no, raw in enumerate(csv.reader(fh), start=1):
            if not raw:
                continue
            if line_no == 1 and _is_header(raw):
                width = len(raw)
                continue
            if width is None:
                width = len(raw)
            rows.append(_parse_row(raw, path, line_no, width))
    if not rows:
        raise PointFileError(f"{path}: no data rows")
    return np.asarray(rows, dtype=np.float64)


def write_ledger_csv(path, points: np.ndarray) -> None:
    """Atomically replace ``path`` with the ledger rows (indices 1..n)."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp_path = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index"] + [f"dim{d}" for d in range(points.shape[1])])
            for i, row in enumerate(points, start=1):
                writer.writerow([str(i)] + [repr(float(v)) for v in row])
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


def read_ledger_csv(path) -> np.ndarray:
    """Read a ledger; validates the header and consecutive emission indices."""
    rows = []
    width = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            return np.empty((0, 1))
        if not header or header[0] != "index":
            raise PointFileError(
                f"{path}: ledger header must start with 'index', got {header!r}"
            )
        width = len(header)
        if width < 2:
            raise PointFileError(f"{path}: ledger has no coordinate columns")
        for line_no, raw in enumerate(reader, start=2):
            if not raw:
                continue
            values = _parse_row(raw, path, line_no, width)
            if values[0] != len(rows) + 1:
                raise PointFileError(
                    f"{path}: row {line_no}: emission index {raw[0]} out of order, "
                    f"expected {len(rows) + 1}"
                )
            rows.append(values[1:])
    if not rows:
        return np.empty((0, width - 1))
    return np.asarray(rows, dtype=np.float64)
