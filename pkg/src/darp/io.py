"""Canonical CSV and JSON interchange.

Matrices: one row per line, comma-separated decimal floats, no header.
Vectors (marginals, weights, class indices): a single line.  Floats are
written with ``repr`` so they round-trip exactly.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .errors import DarpError


class CSVParseError(DarpError, ValueError):
    def __init__(self, path: str, line: int, column: int, message: str) -> None:
        super().__init__(f"{path}:{line}:{column}: {message}")
        self.path, self.line, self.column = path, line, column


def _parse_rows(path: str | Path, header: bool, as_int: bool) -> list[list[Any]]:
    path = str(path)
    rows: list[list[Any]] = []
    width = None
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, record in enumerate(csv.reader(fh), 1):
            if header and lineno == 1:
                continue
            if not record or all(not field.strip() for field in record):
                continue
            values = []
            for col, field in enumerate(record, 1):
                text = field.strip()
                try:
                    if as_int:
                        number = float(text)
                        if not number.is_integer():
                            raise ValueError
                        values.append(int(number))
                    else:
                        number = float(text)
                        if not math.isfinite(number):
                            raise ValueError
                        values.append(number)
                except ValueError:
                    kind = "integer" if as_int else "finite number"
                    raise CSVParseError(path, lineno, col, f"expected a {kind}, got {text!r}") from None
            if width is not None and len(values) != width and not as_int:
                raise CSVParseError(path, lineno, len(values), f"expected {width} fields, got {len(values)}")
            width = len(values)
            rows.append(values)
    if not rows:
        raise CSVParseError(path, 1, 1, "file contains no data")
    return rows


def read_matrix(path: str | Path, header: bool = False) -> np.ndarray:
    return np.array(_parse_rows(path, header, as_int=False), dtype=np.float64)


def read_vector(path: str | Path, header: bool = False) -> np.ndarray:
    """Read numbers from one line (or one per line) into a flat vector."""
    rows = _parse_rows(path, header, as_int=False)
    return np.array([v for row in rows for v in row], dtype=np.float64)


def read_indices(path: str | Path, header: bool = False) -> np.ndarray:
    rows = _parse_rows(path, header, as_int=True)
    return np.array([v for row in rows for v in row], dtype=np.int64)


def _fmt(x: Any) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_matrix(path: str | Path, matrix: Any) -> None:
    arr = np.asarray(matrix)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for row in arr:
            fh.write(",".join(_fmt(v) for v in row))
            fh.write("\n")


def write_vector(path: str | Path, vector: Any) -> None:
    arr = np.asarray(vector).ravel()
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(_fmt(v) for v in arr))
        fh.write("\n")


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, Path):
        return str(obj)
    return obj


def dumps_json(obj: Any) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path: str | Path, obj: Any) -> None:
    Path(path).write_text(dumps_json(obj), encoding="utf-8")
