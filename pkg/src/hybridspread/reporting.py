"""JSON/CSV writers with 17-significant-digit floats."""

from __future__ import annotations

import csv
import hashlib
import json

import numpy as np


def to17(o):
    """Recursively convert to JSON-ready values, floats rounded to 17 significant digits."""
    if isinstance(o, dict):
        return {str(k): to17(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [to17(v) for v in o]
    if isinstance(o, np.ndarray):
        return [to17(v) for v in o.tolist()]
    if isinstance(o, (bool, np.bool_)):
        return bool(o)
    if isinstance(o, (float, np.floating)):
        f = float(o)
        if not np.isfinite(f):
            return str(f)
        return json.loads(format(f, ".17g"))
    if isinstance(o, np.integer):
        return int(o)
    return o


def dumps(obj) -> str:
    return json.dumps(to17(obj), indent=2, sort_keys=True)


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(obj) + "\n")


def fmt(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return v


def write_csv(path, header, rows, meta: dict | None = None) -> None:
    """Write a CSV table; ``meta`` entries become leading ``# key: value`` lines."""
    with open(path, "w", newline="") as fh:
        for k, v in (meta or {}).items():
            fh.write(f"# {k}: {v}\n")
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def file_hash(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()
