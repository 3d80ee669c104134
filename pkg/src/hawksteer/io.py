"""File formats: JSON-lines event logs, CSV imports, metrics tables.

Event logs round-trip bit-exactly: floats are serialized with their
shortest repr, which Python parses back to the identical double.
"""

from __future__ import annotations

import csv
import json
from typing import Iterable, Optional

from .point import _ORIGIN_NAMES, EventSeq


def write_events_jsonl(path, seq: EventSeq):
    with open(path, "w") as fh:
        for t, d, o in zip(seq.times, seq.dims, seq.origins):
            fh.write(json.dumps({"t": float(t), "dim": int(d),
                                 "origin": _ORIGIN_NAMES[int(o)]}) + "\n")


def read_events_jsonl(path, m: Optional[int] = None) -> EventSeq:
    times, dims, origins = [], [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                times.append(float(obj["t"]))
                dims.append(int(obj["dim"]))
                origins.append(obj.get("origin", "organic"))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad event record: {exc}") from exc
    if m is None:
        m = (max(dims) + 1) if dims else 1
    return EventSeq(m, times, dims, origins)


def read_events_csv(path, m: Optional[int] = None) -> EventSeq:
    """Import an external ``t,dim`` log (header row optional)."""
    times, dims = [], []
    with open(path) as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or not row[0].strip():
                continue
            try:
                t = float(row[0])
            except ValueError:
                if lineno == 1:
                    continue  # header
                raise ValueError(f"{path}:{lineno}: bad time {row[0]!r}")
            times.append(t)
            dims.append(int(row[1]) if len(row) > 1 else 0)
    if m is None:
        m = (max(dims) + 1) if dims else 1
    return EventSeq(m, times, dims)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path, columns: Iterable[str], records: Iterable[Iterable]):
    """Deterministic CSV writer (repr floats, LF endings, fixed columns)."""
    columns = list(columns)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for record in records:
            fh.write(",".join(_cell(v) for v in record) + "\n")


def read_csv_records(path) -> list[dict]:
    with open(path) as fh:
        reader = csv.DictReader(fh)
        return list(reader)
