"""Readers and writers for snapshot files and parameter-point CSVs.

Snapshot CSV
    First row: the time grid ``t_0,...,t_{Nt}``.  Each following row is one
    spatial DOF.  The parameter is not stored and must be supplied on read.

Snapshot binary (little-endian)
    ``b"SDAL"``, version ``u32``, ``N`` ``u64``, ``N_t+1`` ``u64``, ``N_mu`` ``u64``,
    parameter ``f64 x N_mu``, time grid ``f64 x (N_t+1)``, values ``f64`` in
    column-major order.
"""

from __future__ import annotations

import csv
import io
import os
import struct
import tempfile
from pathlib import Path
from typing import Iterable

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import IngestionError
from .pod import SnapshotMatrix

SNAPSHOT_MAGIC = b"SDAL"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<4sIQQQ")


def atomic_write_bytes(path, data: bytes) -> None:
    """Write to a temp file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def _fmt(x: float) -> str:
    # repr round-trips float64 exactly
    return repr(float(x))


def snapshots_to_bytes(snap: SnapshotMatrix) -> bytes:
    n, nt1 = snap.values.shape
    header = _HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, n, nt1, snap.parameter.size)
    return b"".join(
        [
            header,
            snap.parameter.astype("<f8").tobytes(),
            snap.time_grid.astype("<f8").tobytes(),
            snap.values.astype("<f8").tobytes(order="F"),
        ]
    )


def snapshots_from_bytes(data: bytes) -> SnapshotMatrix:
    if len(data) < _HEADER.size:
        raise IngestionError("truncated snapshot file header")
    magic, version, n, nt1, nmu = _HEADER.unpack_from(data, 0)
    if magic != SNAPSHOT_MAGIC:
        raise IngestionError(f"bad magic {magic!r}, expected {SNAPSHOT_MAGIC!r}")
    if version != SNAPSHOT_VERSION:
        raise IngestionError(f"unsupported snapshot format version {version}")
    expected = _HEADER.size + 8 * (nmu + nt1 + n * nt1)
    if len(data) != expected:
        raise IngestionError(f"snapshot payload has {len(data)} bytes, expected {expected}")
    off = _HEADER.size
    param = np.frombuffer(data, "<f8", nmu, off)
    off += 8 * nmu
    grid = np.frombuffer(data, "<f8", nt1, off)
    off += 8 * nt1
    values = np.frombuffer(data, "<f8", n * nt1, off).reshape((n, nt1), order="F")
    return SnapshotMatrix(values.astype(np.float64), param.astype(np.float64), grid.astype(np.float64))


def write_snapshots_bin(path, snap: SnapshotMatrix) -> None:
    atomic_write_bytes(path, snapshots_to_bytes(snap))


def read_snapshots_bin(path) -> SnapshotMatrix:
    return snapshots_from_bytes(Path(path).read_bytes())


def write_snapshots_csv(path, snap: SnapshotMatrix) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([_fmt(t) for t in snap.time_grid])
    for row in snap.values:
        w.writerow([_fmt(v) for v in row])
    atomic_write_text(path, buf.getvalue())


def read_snapshots_csv(path, parameter: ArrayLike) -> SnapshotMatrix:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if len(rows) < 2:
        raise IngestionError(f"{path}: need a header row and at least one DOF row")
    try:
        grid = np.array([float(x) for x in rows[0]])
        values = np.array([[float(x) for x in r] for r in rows[1:]])
    except ValueError as exc:
        raise IngestionError(f"{path}: non-numeric entry ({exc})") from exc
    return SnapshotMatrix(values, np.atleast_1d(parameter), grid)


def read_snapshots(path, parameter: ArrayLike | None = None) -> SnapshotMatrix:
    """Dispatch on content: binary files start with the magic bytes."""
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == SNAPSHOT_MAGIC:
        return read_snapshots_bin(path)
    if parameter is None:
        raise IngestionError(f"{path}: CSV snapshots need an explicit parameter value")
    return read_snapshots_csv(path, parameter)


def write_points_csv(path, points: ArrayLike, header: Iterable[str] | None = None) -> None:
    """One parameter point per row."""
    header = None if header is None else list(header)
    pts = np.asarray(points, dtype=np.float64)
    if pts.size == 0:
        pts = pts.reshape(0, 1 if header is None else len(header))
    if pts.ndim != 2:
        pts = pts.reshape(-1, 1)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header is None:
        header = [f"mu_{k}" for k in range(pts.shape[1])]
    w.writerow(header)
    for p in pts:
        w.writerow([_fmt(v) for v in p])
    atomic_write_text(path, buf.getvalue())


def read_points_csv(path) -> NDArray[np.float64]:
    """Read points written by :func:`write_points_csv`; a non-numeric first row is a header."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    if not rows:
        raise IngestionError(f"{path}: no rows")
    try:
        [float(x) for x in rows[0]]
    except ValueError:
        header, rows = rows[0], rows[1:]
    else:
        header = None
    width = len(header) if header is not None else len(rows[0])
    try:
        pts = np.array([[float(x) for x in r] for r in rows], dtype=np.float64)
    except ValueError as exc:
        raise IngestionError(f"{path}: non-numeric entry ({exc})") from exc
    return pts.reshape(len(rows), width)
