"""Headered CSV grids and JSON helpers.

A grid file has three parts: a line of header names, a line of header
values, then one CSV line per grid row. Floats are written with ``repr`` so
a write/read cycle is lossless; masked cells are written as ``nan``.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import FormatError


def write_grid_csv(path, header: dict, grid):
    grid = np.asarray(grid)
    header = {"rows": grid.shape[0], "cols": grid.shape[1], **header}
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(header))
        w.writerow([_fmt(v) for v in header.values()])
        for row in grid:
            w.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def read_grid_csv(path, dtype=float):
    """Return ``(header, grid)``; errors name the file and the 1-based line."""
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            lines = list(csv.reader(fh))
    except OSError as exc:
        raise FormatError(f"{path}: cannot read ({exc.strerror})") from exc
    if len(lines) < 2:
        raise FormatError(f"{path}: missing header lines")
    names, values = lines[0], lines[1]
    if len(names) != len(values):
        raise FormatError(f"{path} line 2: header has {len(values)} values for {len(names)} names")
    header = dict(zip(names, values))
    try:
        rows, cols = int(header["rows"]), int(header["cols"])
    except (KeyError, ValueError) as exc:
        raise FormatError(f"{path} line 2: rows/cols missing or not integers") from exc
    body = lines[2:]
    if len(body) != rows:
        raise FormatError(f"{path}: expected {rows} grid rows, found {len(body)}")
    grid = np.empty((rows, cols), dtype=dtype)
    for i, line in enumerate(body):
        if len(line) != cols:
            raise FormatError(f"{path} line {i + 3}: expected {cols} values, found {len(line)}")
        try:
            grid[i] = [dtype(v) for v in line]
        except ValueError as exc:
            raise FormatError(f"{path} line {i + 3}: {exc}") from exc
    return header, grid


def write_json(path, payload):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def read_json(path):
    path = Path(path)
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise FormatError(f"{path}: cannot read ({exc.strerror})") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path} line {exc.lineno}: {exc.msg}") from exc


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def write_table_csv(path, columns, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) if v is not None else "" for v in row])
