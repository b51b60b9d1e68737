"""Deterministic JSON and CSV report emission."""

from __future__ import annotations

import csv
import io
import json
import math
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

SIGNIFICANT_DIGITS = 12


def fmt_float(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.{SIGNIFICANT_DIGITS}g}"


def _round(x: float):
    if not math.isfinite(x):
        return fmt_float(x)
    return float(fmt_float(x))


def jsonable(obj: Any) -> Any:
    """Plain JSON value; floats rounded to 12 significant digits, fractions as ``[num, den]``."""
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, Fraction):
        return [obj.numerator, obj.denominator]
    if isinstance(obj, (float, np.floating)):
        return _round(float(obj))
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(doc: dict) -> str:
    return json.dumps(jsonable(doc), indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def _cell(v: Any) -> str:
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (float, np.floating)):
        return fmt_float(float(v))
    if v is None:
        return ""
    return str(v)


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


class Report:
    """A JSON document plus an optional flat table."""

    def __init__(self, name: str, doc: dict, header: Sequence[str] = (), rows: list | None = None):
        self.name = name
        self.doc = doc
        self.header = list(header)
        self.rows = rows or []

    def write(self, out: Path, fmt: str) -> list[Path]:
        out.mkdir(parents=True, exist_ok=True)
        written = []
        if fmt in ("json", "both"):
            p = out / f"{self.name}.json"
            p.write_text(dumps(self.doc))
            written.append(p)
        if fmt in ("csv", "both") and self.header:
            p = out / f"{self.name}.csv"
            p.write_text(csv_text(self.header, self.rows))
            written.append(p)
        return written
