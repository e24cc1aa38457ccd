#!/usr/bin/env python3
"""
Schema-versioned report writers.

JSON goes through orjson with sorted keys, so a rerun with the same inputs
produces the same bytes. CSV files start with a schema comment and one comment
line per column.

Copyright (c) 2024 ROX Automation
"""
from __future__ import annotations

import csv
import logging
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
import orjson

# bump when the layout of a report kind changes
SCHEMA_VERSIONS = {
    "ap": 1,
    "barcode": 1,
    "curves": 1,
    "figure": 1,
    "fit": 1,
    "groupstats": 1,
    "manifest": 1,
    "ml": 1,
    "perm": 1,
    "stats": 1,
    "validation": 1,
}

JSON_OPTIONS = orjson.OPT_SORT_KEYS | orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY

log = logging.getLogger(__name__)


def schema(kind: str) -> str:
    return f"bsdlab.{kind}/{SCHEMA_VERSIONS[kind]}"


def _default(obj: Any) -> Any:
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if hasattr(obj, "_asdict"):
        return obj._asdict()
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def json_float(value: float) -> float | str:
    """floats with inf/nan spelled out, JSON has no literal for them"""
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if math.isnan(value):
        return "nan"
    return value


def dumps(data: Any) -> bytes:
    return orjson.dumps(data, default=_default, option=JSON_OPTIONS) + b"\n"


def write_json(path: str | Path, kind: str, payload: dict[str, Any]) -> Path:
    """write a report dict with its schema tag"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(dumps({"schema": schema(kind), **payload}))
    log.debug(f"wrote {path}")
    return path


def read_json(path: str | Path) -> Any:
    return orjson.loads(Path(path).read_bytes())


def write_csv(
    path: str | Path,
    kind: str,
    columns: Sequence[tuple[str, str]],
    rows: Iterable[Sequence[Any]],
) -> Path:
    """CSV with a schema line and per-column documentation

    `columns` holds (name, description) pairs.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write(f"# schema: {schema(kind)}\n")
        for name, doc in columns:
            fh.write(f"# {name}: {doc}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([name for name, _ in columns])
        count = 0
        for row in rows:
            writer.writerow([_cell(v) for v in row])
            count += 1
    log.debug(f"wrote {count} rows to {path}")
    return path


def _cell(value: Any) -> Any:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return int(value)
    return value
