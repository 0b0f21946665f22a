"""Versioned table writers.

Every file carries ``schema_version`` and the effective run configuration:

* CSV: ``# schema_version: N`` and ``# config: {...}`` comment lines, then a
  header row;
* JSONL: a first line ``{"schema_version": N, "config": {...}, "columns": [...]}``,
  then one object per row;
* JSON: one document ``{"schema_version", "config", "columns", "rows"}``.

Floats are written with ``repr`` so outputs are byte-identical across runs.
"""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1
FORMATS = ("csv", "jsonl", "json")


def _plain(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    return x


def dumps(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, allow_nan=True)


def write_table(path, columns, rows, config: dict, fmt: str = "csv") -> Path:
    """Write ``rows`` (iterables aligned with ``columns``) to ``path``.

    The file suffix is replaced by ``fmt``.
    """
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}")
    path = Path(path).with_suffix("." + fmt)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = list(columns)
    rows = [[_plain(v) for v in r] for r in rows]
    buf = io.StringIO()
    if fmt == "csv":
        buf.write(f"# schema_version: {SCHEMA_VERSION}\n# config: {dumps(config)}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        w.writerows([[repr(v) if isinstance(v, float) else v for v in r] for r in rows])
    elif fmt == "jsonl":
        buf.write(dumps({"schema_version": SCHEMA_VERSION, "config": config, "columns": columns}) + "\n")
        for r in rows:
            buf.write(json.dumps(dict(zip(columns, r)), allow_nan=True) + "\n")
    else:
        buf.write(dumps({"schema_version": SCHEMA_VERSION, "config": config, "columns": columns,
                         "rows": rows}) + "\n")
    path.write_text(buf.getvalue())
    return path


def write_summary(path, summary: dict, config: dict) -> Path:
    """JSON summary document with the schema version and config embedded."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"schema_version": SCHEMA_VERSION, "config": config, **summary}
    path.write_text(json.dumps(_plain(doc), sort_keys=True, indent=2, allow_nan=True) + "\n")
    return path


def read_csv(path):
    """Inverse of the CSV writer: ``(config, columns, rows as float arrays)``."""
    lines = Path(path).read_text().splitlines()
    meta = [ln for ln in lines if ln.startswith("#")]
    config = json.loads(next(ln for ln in meta if ln.startswith("# config:"))[len("# config:"):])
    body = [ln for ln in lines if not ln.startswith("#")]
    reader = list(csv.reader(body))
    return config, reader[0], np.array(reader[1:], dtype=float).reshape(-1, len(reader[0]))
