"""Comma-separated output with shortest round-trip float formatting."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..grid import GridField


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return repr(float(v))


def write_rows(path, header: list[str], rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def write_array(path, header: list[str], table: np.ndarray, int_cols: int = 0) -> Path:
    """Numeric table; the first ``int_cols`` columns are written as integers."""
    table = np.asarray(table)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in table:
            head = [str(int(v)) for v in row[:int_cols]]
            fh.write(",".join(head + [repr(float(v)) for v in row[int_cols:]]) + "\n")
    return path


def read_table(path) -> dict[str, np.ndarray]:
    """Columns of a CSV written by this module, keyed by header name."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.size == 0:
        return {h: np.array([]) for h in header}
    return {h: data[:, k] for k, h in enumerate(header)}


def coord_names(dim: int) -> list[str]:
    return [f"x{k + 1}" for k in range(dim)]


def field_rows(f: GridField, t: float | None = None) -> np.ndarray:
    pts = f.points().reshape(-1, f.dim)
    cols = [pts, f.values.reshape(-1, 1)]
    if t is not None:
        cols.insert(0, np.full((pts.shape[0], 1), float(t)))
    return np.hstack(cols)


def write_snapshots(path, snapshots: dict[float, GridField]) -> Path:
    """Long-format ``t,x1[,x2],f`` table, one block per snapshot time."""
    items = sorted(snapshots.items())
    dim = items[0][1].dim
    table = np.vstack([field_rows(f, t) for t, f in items])
    return write_array(path, ["t", *coord_names(dim), "f"], table)


def write_field(path, f: GridField) -> Path:
    return write_array(path, [*coord_names(f.dim), "f"], field_rows(f))


def write_timeseries(path, record) -> Path:
    """``t,mass,mean1[,mean2],energy,entropy``; entropy is ``nan`` when not recorded."""
    mean = np.atleast_2d(record.mean)
    if mean.shape[0] != len(record.times):
        mean = mean.T
    dim = mean.shape[1]
    ent = record.entropy if record.entropy is not None else np.full(len(record.times), np.nan)
    table = np.column_stack([record.times, record.mass, mean, record.energy, ent])
    return write_array(path, ["t", "mass", *[f"mean{k + 1}" for k in range(dim)], "energy", "entropy"], table)


def write_trajectory(path, record) -> Path:
    """Particle record as ``t,u1[,u2],E``."""
    mean = np.atleast_2d(record.mean)
    if mean.shape[0] != len(record.times):
        mean = mean.T
    table = np.column_stack([record.times, mean, record.energy])
    return write_array(path, ["t", *[f"u{k + 1}" for k in range(mean.shape[1])], "E"], table)


def write_positions(path, positions: np.ndarray) -> Path:
    idx = np.arange(positions.shape[0])[:, None]
    return write_array(path, ["index", *coord_names(positions.shape[1])], np.hstack([idx, positions]), int_cols=1)


def write_series(path, times, values, extra: dict[str, np.ndarray] | None = None) -> Path:
    """``t,value`` plus optional named columns."""
    extra = extra or {}
    table = np.column_stack([times, values, *extra.values()]) if extra else np.column_stack([times, values])
    return write_array(path, ["t", "value", *extra], table)
