"""
soil/io.py

Reading and writing point sets and tabular results.

CSV conventions: header `x,y` / `x,y,z` (or `c0,c1,...` for other
dimensions), one row per record, '.' decimal point, floats at 17 significant
digits so a write → read round trip reproduces every value exactly.
"""

from __future__ import annotations

import csv
import json
import math
from io import StringIO
from pathlib import Path
from typing import Any, Iterable, Sequence, TextIO

import numpy as np

from .errors import ValidationError
from .pointset import PointSet

_NAMED_HEADERS = {1: ["x"], 2: ["x", "y"], 3: ["x", "y", "z"]}


def point_header(d: int) -> list[str]:
    return _NAMED_HEADERS.get(d, [f"c{i}" for i in range(d)])


def format_value(value: Any) -> str:
    """Render one CSV cell; floats keep full precision."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.17g}"
    return str(value)


def _write_rows(f: TextIO, header: Sequence[str], rows: Iterable[Sequence[Any]], where: str) -> None:
    writer = csv.writer(f, lineterminator="\n")
    writer.writerow(list(header))
    for row in rows:
        if len(row) != len(header):
            raise ValidationError(
                f"Row width {len(row)} does not match header width {len(header)} for {where}."
            )
        writer.writerow([format_value(v) for v in row])


def write_csv_rows(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        _write_rows(f, header, rows, str(path))
    return path


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = StringIO()
    _write_rows(buffer, header, rows, "stdout")
    return buffer.getvalue()


def read_csv_rows(path: str | Path) -> tuple[list[str], list[list[str]]]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"CSV file not found: {path}")
    with open(path, "r", newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"CSV file is empty: {path}")
        rows = [row for row in reader if row]
    return header, rows


def write_json(path: str | Path, payload: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=False)
        f.write("\n")
    return path


def read_json(path: str | Path) -> Any:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"JSON file not found: {path}")
    with open(path, "r") as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as e:
            raise ValidationError(f"Invalid JSON in {path}: {e}") from e


# === Point sets ===

def write_points(path: str | Path, S: PointSet, fmt: str = "csv") -> Path:
    if fmt == "json":
        return write_json(path, {"points": S.points.tolist()})
    return write_csv_rows(path, point_header(S.d), S.points.tolist())


def _parse_float(cell: str, row: int, col: int, path: Path) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise ValidationError(f"{path}: non-numeric cell '{cell}' at row {row}, column {col}.")
    if not math.isfinite(value):
        raise ValidationError(f"{path}: non-finite value '{cell}' at row {row}, column {col}.")
    return value


def read_points(path: str | Path) -> PointSet:
    """Read a point set from CSV (named or c0.. header) or JSON {points: [[...], ...]}."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        payload = read_json(path)
        if not isinstance(payload, dict) or "points" not in payload:
            raise ValidationError(f"{path}: JSON point files need a top-level 'points' array.")
        return PointSet.from_rows(payload["points"])

    header, rows = read_csv_rows(path)
    d = len(header)
    if header != point_header(d):
        raise ValidationError(
            f"{path}: unexpected header {header}.\n"
            f"  Expected {point_header(d)} for d={d}."
        )
    values = []
    for r, row in enumerate(rows, start=2):
        if len(row) != d:
            raise ValidationError(f"{path}: row {r} has {len(row)} cells, expected {d}.")
        values.append([_parse_float(c, r, j, path) for j, c in enumerate(row)])
    if not values:
        raise ValidationError(f"{path}: no points found.")
    return PointSet(np.array(values, dtype=np.float64))


# === Labels ===

def write_labels(path: str | Path, labels: Sequence[int] | np.ndarray) -> Path:
    return write_csv_rows(path, ["label"], [[int(v)] for v in np.asarray(labels).tolist()])


def read_labels(path: str | Path) -> np.ndarray:
    """Read one integer label per row from a CSV with header `label`."""
    path = Path(path)
    header, rows = read_csv_rows(path)
    if header != ["label"]:
        raise ValidationError(f"{path}: expected header ['label'], got {header}.")
    labels = []
    for r, row in enumerate(rows, start=2):
        try:
            labels.append(int(row[0]))
        except (ValueError, IndexError):
            raise ValidationError(f"{path}: row {r} is not an integer label.")
    if not labels:
        raise ValidationError(f"{path}: no labels found.")
    return np.array(labels, dtype=np.int64)
