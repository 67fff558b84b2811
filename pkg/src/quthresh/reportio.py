"""Deterministic serialization for reports and CLI outputs.

JSON uses fixed field ordering (insertion order) and 17-significant-digit
reals so repeated seeded runs produce byte-identical files. JSON cannot
carry non-finite numbers, so inf/-inf/nan become the strings "inf",
"-inf", "nan".
"""

from __future__ import annotations

import csv
import math
from pathlib import Path


def format_real(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(float(x), ".17g")


def _json_token(value) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isfinite(value):
            return format_real(value)
        return '"' + format_real(value) + '"'
    if isinstance(value, str):
        out = value.replace("\\", "\\\\").replace('"', '\\"')
        return '"' + out + '"'
    if isinstance(value, dict):
        items = (f"{_json_token(str(k))}: {_json_token(v)}"
                 for k, v in value.items())
        return "{" + ", ".join(items) + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_json_token(v) for v in value) + "]"
    if hasattr(value, "item"):  # numpy scalar
        return _json_token(value.item())
    if hasattr(value, "tolist"):  # numpy array
        return _json_token(value.tolist())
    raise TypeError(f"cannot serialize {type(value)!r}")


def canonical_json(obj) -> str:
    return _json_token(obj) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(canonical_json(obj), encoding="utf-8")


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_real(value)
    if hasattr(value, "item"):
        return _cell(value.item())
    return str(value)


def write_csv(path, records, fieldnames=None) -> None:
    """Write dict records with a stable first-seen column order."""
    if fieldnames is None:
        fieldnames = []
        for rec in records:
            for key in rec:
                if key not in fieldnames:
                    fieldnames.append(key)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(fieldnames)
        for rec in records:
            writer.writerow([_cell(rec.get(k)) for k in fieldnames])
