"""Result rows and their on-disk formats.

CSV columns, in order::

    experiment, n, m, x, label, statistic, value, error, samples, master_seed, block_size

``x`` is the plotting abscissa (``m`` for most experiments, ``m/n`` for
eigen-scaling).  ``label`` names the ensemble or ensemble pair.  Missing
errors are empty in CSV and ``null`` in JSONL.  Floats are written with
``repr`` so they round-trip exactly.

Files are written to a temporary sibling and renamed into place, so an
interrupted run never leaves a partial file at the requested path.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, fields
from pathlib import Path

FORMATS = ("csv", "jsonl")


@dataclass(frozen=True)
class ResultRecord:
    experiment: str
    n: int
    m: int
    x: float
    label: str
    statistic: str
    value: float
    error: float | None
    samples: int
    master_seed: int
    block_size: int


COLUMNS = [f.name for f in fields(ResultRecord)]


def _clean(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _csv_cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render(records, fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        for rec in records:
            writer.writerow([_csv_cell(_clean(getattr(rec, c))) for c in COLUMNS])
        return buf.getvalue()
    if fmt == "jsonl":
        return "".join(
            json.dumps({k: _clean(v) for k, v in asdict(rec).items()}) + "\n" for rec in records
        )
    raise ValueError(f"unknown format {fmt!r}; choose from {FORMATS}")


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_records(records, path, fmt: str) -> None:
    atomic_write_text(path, render(records, fmt))


def read_records(path) -> list[dict]:
    """Parse a result file back into dicts (types restored for CSV)."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".jsonl" or text.lstrip().startswith("{"):
        return [json.loads(line) for line in text.splitlines() if line.strip()]
    rows = []
    types = {f.name: f.type for f in fields(ResultRecord)}
    for row in csv.DictReader(io.StringIO(text)):
        out = {}
        for k, v in row.items():
            t = types[k]
            if v == "":
                out[k] = None
            elif t == "int":
                out[k] = int(v)
            elif t.startswith("float"):
                out[k] = float(v)
            else:
                out[k] = v
        rows.append(out)
    return rows
