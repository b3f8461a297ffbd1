"""CSV/JSON emission with round-trip-safe floats and an embedded config header."""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

CSV_FLOAT = "%.17g"


def _clean(obj):
    """Make ``obj`` strict-JSON serializable: numpy scalars to Python, NaN/inf to null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def dumps_line(obj) -> str:
    """One-line JSON with sorted keys."""
    return json.dumps(_clean(obj), sort_keys=True, separators=(",", ":"))


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")
    return path


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return CSV_FLOAT % float(v)
    if v is None:
        return ""
    return str(getattr(v, "value", v))


def write_csv(path, columns, rows, config: dict | None = None) -> Path:
    """Comma-separated table; first line is ``# config: {...}`` when ``config`` is given.

    ``rows`` may be a 2-D array or an iterable of sequences / dicts keyed by column.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    if config is not None:
        lines.append("# config: " + dumps_line(config))
    lines.append(",".join(columns))
    for row in rows:
        if isinstance(row, dict):
            row = [row.get(c) for c in columns]
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path) -> tuple[dict | None, list[str], list[list[str]]]:
    """Inverse of :func:`write_csv` (values left as strings)."""
    text = Path(path).read_text().splitlines()
    config = None
    if text and text[0].startswith("# config: "):
        config = json.loads(text[0][len("# config: "):])
        text = text[1:]
    columns = text[0].split(",")
    return config, columns, [line.split(",") for line in text[1:]]
