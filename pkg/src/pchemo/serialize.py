"""CSV / JSON writers with shortest round-trip float formatting.

Data files contain no timestamps or host information, so an identical
config reproduces them byte for byte; run metadata goes to a sidecar.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

HASH_COLUMN = "config_hash"


def format_value(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        # repr is the shortest string that parses back to the same double
        return repr(float(x))
    if x is None:
        return ""
    return str(x)


def parse_value(s: str):
    if s == "":
        return None
    if s in ("true", "false"):
        return s == "true"
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        # JSON has no NaN or inf; keep them as tagged strings
        return x if math.isfinite(x) else repr(x)
    return x


def write_csv(records, path, columns=None, config_hash: str | None = None) -> Path:
    """One header row then one line per record; ``config_hash`` is appended to every row.

    ``columns`` fixes the header; without it the keys of the first record
    are used, so an empty record list needs explicit ``columns``.
    """
    path = Path(path)
    records = list(records)
    if columns is None:
        if not records:
            raise ValueError(f"cannot infer columns for empty CSV {path}")
        columns = list(records[0])
    columns = list(columns)
    if config_hash is not None and HASH_COLUMN not in columns:
        columns.append(HASH_COLUMN)
    try:
        with path.open("w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(columns)
            for rec in records:
                row = dict(rec)
                if config_hash is not None:
                    row.setdefault(HASH_COLUMN, config_hash)
                missing = [c for c in columns if c not in row]
                if missing:
                    raise ValueError(f"record for {path} lacks columns {missing}")
                wr.writerow([format_value(row[c]) for c in columns])
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc
    return path


def read_csv(path) -> tuple[list[str], list[dict]]:
    """Parse a file written by :func:`write_csv`; returns ``(columns, records)``."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise OSError(exc.errno, f"cannot read {path}: {exc.strerror}") from exc
    if not rows:
        raise ValueError(f"{path} has no header row")
    header, body = rows[0], rows[1:]
    records = []
    for i, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise ValueError(f"{path}:{i}: expected {len(header)} fields, got {len(row)}")
        # a hex hash such as 12e45... would otherwise parse as a float
        records.append({c: v if c == HASH_COLUMN else parse_value(v) for c, v in zip(header, row)})
    return header, records


def columns_of(records: list[dict], names) -> dict:
    """Stack named columns of parsed records into float arrays."""
    return {n: np.array([np.nan if r[n] is None else r[n] for r in records], dtype=float) for n in names}


def write_json(config: dict, records, path) -> Path:
    path = Path(path)
    doc = {"config": _jsonable(config), "records": _jsonable(list(records))}
    try:
        path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc
    return path


def read_json(path) -> dict:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise OSError(exc.errno, f"cannot read {path}: {exc.strerror}") from exc
