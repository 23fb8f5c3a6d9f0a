"""Deterministic CSV/JSON emission of flat record lists."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile

import numpy as np

__all__ = ["format_value", "emit_table", "parse_table", "write_atomic"]


def format_value(v) -> str:
    """Floats in 17-significant-digit scientific notation; bools as true/false."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        x = float(v)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.16e}"
    return str(v)


def _columns(records, columns):
    if columns is not None:
        return list(columns)
    if not records:
        return []
    cols = list(records[0].keys())
    for r in records[1:]:
        if list(r.keys()) != cols:
            raise ValueError("records are not homogeneous")
    return cols


def emit_table(records, fmt: str = "csv", columns=None) -> bytes:
    records = list(records)
    cols = _columns(records, columns)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if cols:
            w.writerow(cols)
        for r in records:
            w.writerow([format_value(r[c]) for c in cols])
        return buf.getvalue().encode("utf-8")
    if fmt == "json":
        rows = []
        for r in records:
            items = []
            for c in cols:
                v = r[c]
                if isinstance(v, str):
                    tok = json.dumps(v)
                else:
                    tok = format_value(v)
                    if tok in ("nan", "inf", "-inf"):
                        tok = json.dumps(tok)
                items.append(f"{json.dumps(c)}: {tok}")
            rows.append("  {" + ", ".join(items) + "}")
        body = ",\n".join(rows)
        return ("[\n" + body + "\n]\n" if rows else "[]\n").encode("utf-8")
    raise ValueError(f"unknown format {fmt!r}")


def _parse(s: str):
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


def parse_table(data: bytes, fmt: str = "csv") -> list[dict]:
    text = data.decode("utf-8")
    if fmt == "csv":
        return [{k: _parse(v) for k, v in row.items()} for row in csv.DictReader(io.StringIO(text))]
    if fmt == "json":
        return [{k: (_parse(v) if isinstance(v, str) and v in ("nan", "inf", "-inf") else v) for k, v in r.items()} for r in json.loads(text)]
    raise ValueError(f"unknown format {fmt!r}")


def write_atomic(path: str | os.PathLike, data: bytes) -> None:
    """Write via a temporary file in the target directory and rename over ``path``."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=d)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
