"""Deterministic JSON and CSV emission."""

from __future__ import annotations

import csv
import io
import json
import math
from collections.abc import Iterable, Sequence
from pathlib import Path

import numpy as np

from . import __version__

SCHEMA_VERSION = 1
VERSION_TAG = f"v{__version__}"


def plain(obj):
    """Convert numpy scalars/arrays, tuples and non-finite floats into JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def dumps(obj) -> str:
    """Sorted keys, shortest round-trip floats (repr, at most 17 digits), trailing newline."""
    return json.dumps(plain(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def build_report(command: str, config: dict, results: dict, passed: bool) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "version": VERSION_TAG,
        "command": command,
        "seed": config.get("seed"),
        "config": dict(config),
        "passed": bool(passed),
        "results": results,
    }


def csv_text(columns: Sequence[str], rows: Iterable[Sequence], comment: str) -> str:
    buf = io.StringIO()
    buf.write(f"# {comment}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else plain(v) for v in row])
    return buf.getvalue()


def write_text(path: str | Path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")
