"""Flat-file output: versioned CSV tables, key=value reports and config files."""
from __future__ import annotations

import os
import tempfile
from pathlib import Path

import numpy as np


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def atomic_write(path, text: str) -> Path:
    """Write via a temporary file in the same directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def csv_text(schema: str, columns: dict, version: int = 1) -> str:
    names = list(columns)
    cols = [np.atleast_1d(np.asarray(columns[n])) for n in names]
    n = len(cols[0])
    if any(len(c) != n for c in cols):
        raise ValueError("CSV columns have different lengths")
    lines = [f"# schema={schema}/{version}", ",".join(names)]
    lines += [",".join(_fmt(c[i]) for c in cols) for i in range(n)]
    return "\n".join(lines) + "\n"


def write_csv(path, schema: str, columns: dict, version: int = 1) -> Path:
    return atomic_write(path, csv_text(schema, columns, version))


def read_csv(path):
    """Returns (schema, dict of float arrays)."""
    with open(path) as fh:
        header = fh.readline().strip()
        names = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    schema = header.split("=", 1)[1] if header.startswith("# schema=") else ""
    return schema, {n: data[:, i] for i, n in enumerate(names)}


def report_text(record: dict) -> str:
    return "".join(f"{k}={_fmt(v)}\n" for k, v in record.items())


def read_config(path) -> dict:
    """Parse ``key = value`` lines; '#' starts a comment.  Keys are normalized to snake_case."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = val
    return out
