"""Payload tables, their CSV/JSON encodings and the run record.

Payload files hold only deterministic data, so re-running a recorded
configuration reproduces them byte for byte. Timestamps and versions live in
the sidecar record ``<payload>.record.json``.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ValidationError

SCHEMA_VERSION = 1


@dataclass
class Table:
    kind: str
    columns: list[str]
    rows: list[list]
    unit: str
    meta: dict = field(default_factory=dict)

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return format(v, ".12g")
    return str(v)


def _parse_cell(s: str):
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


def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    return v


def emit(table: Table, fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(table.columns)
        for r in table.rows:
            w.writerow([_fmt(v) for v in r])
        return buf.getvalue()
    if fmt == "json":
        doc = {
            "schema_version": SCHEMA_VERSION,
            "kind": table.kind,
            "unit": table.unit,
            "meta": table.meta,
            "columns": table.columns,
            "rows": table.rows,
        }
        return json.dumps(_json_safe(doc), indent=2, sort_keys=False) + "\n"
    raise ValidationError(f"unknown format {fmt!r}; expected csv or json")


def parse(text: str, fmt: str, kind: str = "", unit: str = "") -> Table:
    if fmt == "csv":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows:
            raise ValidationError("empty CSV payload")
        return Table(kind, rows[0], [[_parse_cell(c) for c in r] for r in rows[1:]], unit)
    if fmt == "json":
        doc = json.loads(text)
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise ValidationError(f"unsupported schema_version {doc.get('schema_version')!r}")
        return Table(doc["kind"], doc["columns"], doc["rows"], doc["unit"], doc.get("meta", {}))
    raise ValidationError(f"unknown format {fmt!r}; expected csv or json")


def read_payload(path, fmt: str | None = None) -> Table:
    p = Path(path)
    fmt = fmt or ("json" if p.suffix == ".json" else "csv")
    return parse(p.read_text(encoding="utf-8"), fmt)


def write_payload(table: Table, path, fmt: str) -> bytes:
    data = emit(table, fmt).encode("utf-8")
    Path(path).write_bytes(data)
    return data


def record_path(payload_path) -> Path:
    p = Path(payload_path)
    return p.with_name(p.name + ".record.json")


def write_record(payload_path, config: dict, payload: bytes, version: str, timestamp: str) -> Path:
    rec = {
        "schema_version": SCHEMA_VERSION,
        "version": version,
        "timestamp": timestamp,
        "payload_file": Path(payload_path).name,
        "payload_sha256": hashlib.sha256(payload).hexdigest(),
        "config": config,
    }
    out = record_path(payload_path)
    out.write_text(json.dumps(_json_safe(rec), indent=2) + "\n", encoding="utf-8")
    return out


def read_record(path) -> dict:
    try:
        rec = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ValidationError(f"{path}: file not found") from None
    except json.JSONDecodeError as e:
        raise ValidationError(f"{path}:{e.lineno}: malformed record: {e.msg}") from None
    if not isinstance(rec, dict) or "config" not in rec:
        raise ValidationError(f"{path}: not a run record (no 'config' field)")
    return rec
