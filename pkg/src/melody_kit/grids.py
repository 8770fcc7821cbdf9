"""Prediction / label grid files.

Two layouts are read and written:

* CSV: one row per frame, ``time`` followed by the F+1 grid values
  (column 0 of the grid is voicing).
* ZGRD binary, little-endian: magic ``b"ZGRD"``, u32 version, u32 T,
  u32 F+1, f64 frame period, then T*(F+1) f64 values row-major.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .decode import FRAME_PERIOD

MAGIC = b"ZGRD"
VERSION = 1
_HEADER = struct.Struct("<4sIIId")


def write_grid_csv(path, grid, period: float = FRAME_PERIOD) -> None:
    grid = np.atleast_2d(np.asarray(grid, dtype=np.float64))
    with open(Path(path), "w") as fh:
        for t, row in enumerate(grid):
            fh.write(f"{t * period:.17g}," + ",".join(f"{x:.17g}" for x in row) + "\n")


def write_grid_bin(path, grid, period: float = FRAME_PERIOD) -> None:
    grid = np.atleast_2d(np.asarray(grid, dtype=np.float64))
    t, f = grid.shape
    with open(Path(path), "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, t, f, period))
        fh.write(np.ascontiguousarray(grid, dtype="<f8").tobytes())


def write_grid(path, grid, period: float = FRAME_PERIOD) -> None:
    """Write CSV for ``.csv``/``.txt`` paths, ZGRD binary otherwise."""
    if Path(path).suffix.lower() in (".csv", ".txt"):
        write_grid_csv(path, grid, period)
    else:
        write_grid_bin(path, grid, period)


def read_grid(path) -> tuple[np.ndarray, float]:
    """Load a grid file in either layout; returns ``(grid, frame_period)``."""
    path = Path(path)
    data = path.read_bytes()
    if data[:4] == MAGIC:
        if len(data) < _HEADER.size:
            raise ValueError(f"{path}: truncated header")
        _, version, t, f, period = _HEADER.unpack_from(data)
        if version != VERSION:
            raise ValueError(f"{path}: unsupported grid version {version}")
        if len(data) != _HEADER.size + 8 * t * f:
            raise ValueError(f"{path}: payload size does not match {t}x{f} header")
        grid = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(t, f)
        return grid.astype(np.float64), period

    rows = np.loadtxt(path, delimiter=",", ndmin=2)
    if rows.shape[1] < 2:
        raise ValueError(f"{path}: need a time column plus grid values")
    times, grid = rows[:, 0], rows[:, 1:]
    period = float(times[1] - times[0]) if len(times) > 1 else FRAME_PERIOD
    return grid, period
