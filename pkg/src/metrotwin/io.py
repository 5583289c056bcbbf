"""Persistence formats: line-delimited JSON record store and CSV export.

The JSONL store is append-only; a line is written in full (single write
plus flush) before the record is published to readers, and readers skip
a torn trailing line, so a crash mid-append can never surface a partial
record. Unknown JSON fields round-trip through MeasurementRecord.extra.
"""

from __future__ import annotations

import json
import os
import threading
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

from .campaign import AnomalyLabel
from .core import (
    DeviceKind,
    DimensionFeature,
    FeatureKind,
    GeometryClass,
    MeasurementRecord,
    Part,
)
from .errors import ValidationError

__all__ = [
    "SCHEMA_VERSION", "CSV_HEADER", "ParseError",
    "record_to_dict", "record_from_dict", "serialize_record", "parse_record",
    "write_jsonl", "read_jsonl", "iter_jsonl", "write_csv",
    "write_labels", "read_labels", "JsonlStore",
    "part_to_dict", "part_from_dict", "write_catalog", "read_catalog",
]

SCHEMA_VERSION = 1

CSV_HEADER = ("part_id,part_description,device,temperature_c,humidity_pct,"
              "nominal_mm,measured_mm,deviation_mm,tolerance_band_mm,"
              "timestamp_utc,operator_id,duration_s,repetition")

# Canonical JSONL field order; anything else round-trips through `extra`.
_RECORD_FIELDS = (
    "schema_version", "record_id", "part_id", "feature_id", "device",
    "temperature_c", "humidity_pct", "nominal_mm", "measured_mm",
    "deviation_mm", "tolerance_band_mm", "timestamp_utc", "operator_id",
    "duration_s", "repetition",
)


class ParseError(ValidationError):
    code = "parse"

    def __init__(self, message: str, line_no: int | None = None):
        prefix = f"line {line_no}: " if line_no is not None else ""
        super().__init__(prefix + message)
        self.line_no = line_no


def _format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def _parse_timestamp(text: str) -> datetime:
    return datetime.fromisoformat(text.replace("Z", "+00:00"))


def record_to_dict(record: MeasurementRecord) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "record_id": record.record_id,
        "part_id": record.part_id,
        "feature_id": record.feature_id,
        "device": record.device.value,
        "temperature_c": record.temperature,
        "humidity_pct": record.humidity,
        "nominal_mm": record.nominal_value,
        "measured_mm": record.measured_value,
        "deviation_mm": record.deviation,
        "tolerance_band_mm": record.tolerance_band,
        "timestamp_utc": _format_timestamp(record.timestamp),
        "operator_id": record.operator_id,
        "duration_s": int(record.duration) if float(record.duration).is_integer() else record.duration,
        "repetition": record.repetition_index,
    }
    for key in sorted(record.extra):
        if key not in doc:
            doc[key] = record.extra[key]
    return doc


def record_from_dict(doc: dict, line_no: int | None = None) -> MeasurementRecord:
    try:
        extra = {k: v for k, v in doc.items() if k not in _RECORD_FIELDS}
        return MeasurementRecord(
            record_id=str(doc["record_id"]),
            part_id=str(doc["part_id"]),
            feature_id=str(doc["feature_id"]),
            device=DeviceKind(doc["device"]),
            temperature=float(doc["temperature_c"]),
            humidity=float(doc["humidity_pct"]),
            nominal_value=float(doc["nominal_mm"]),
            measured_value=float(doc["measured_mm"]),
            deviation=float(doc["deviation_mm"]),
            tolerance_band=float(doc["tolerance_band_mm"]),
            timestamp=_parse_timestamp(str(doc["timestamp_utc"])),
            operator_id=str(doc["operator_id"]),
            duration=float(doc["duration_s"]),
            repetition_index=int(doc["repetition"]),
            extra=extra,
        )
    except KeyError as exc:
        raise ParseError(f"missing field {exc.args[0]!r}", line_no) from exc
    except (ValueError, TypeError) as exc:
        raise ParseError(str(exc), line_no) from exc


def serialize_record(record: MeasurementRecord) -> str:
    """One JSON line (no trailing newline); stable field order."""
    return json.dumps(record_to_dict(record), separators=(",", ":"))


def parse_record(line: str, line_no: int | None = None) -> MeasurementRecord:
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc.msg}", line_no) from exc
    if not isinstance(doc, dict):
        raise ParseError("expected a JSON object", line_no)
    return record_from_dict(doc, line_no)


def write_jsonl(records: Iterable[MeasurementRecord], path: str | Path) -> int:
    path = Path(path)
    n = 0
    with path.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(serialize_record(record) + "\n")
            n += 1
    return n


def iter_jsonl(path: str | Path):
    """Yield records; a torn (newline-less) final line is skipped."""
    with Path(path).open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.endswith("\n"):
                break  # torn tail: written mid-crash, never published
            text = line.strip()
            if text:
                yield parse_record(text, line_no)


def read_jsonl(path: str | Path) -> list[MeasurementRecord]:
    return list(iter_jsonl(path))


def _csv_field(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(records: Sequence[MeasurementRecord], path: str | Path,
              parts: Sequence[Part] | None = None) -> int:
    """CSV export with the fixed header; descriptions come from the part
    catalog when given (falling back to record metadata, then blank)."""
    descriptions = {p.part_id: p.description for p in parts} if parts else {}
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        n = 0
        for rec in records:
            desc = descriptions.get(rec.part_id, rec.extra.get("part_description", ""))
            if "," in desc or '"' in desc:
                desc = '"' + desc.replace('"', '""') + '"'
            row = (
                rec.part_id, desc, rec.device.value,
                _csv_field(rec.temperature), _csv_field(rec.humidity),
                _csv_field(rec.nominal_value), _csv_field(rec.measured_value),
                _csv_field(rec.deviation), _csv_field(rec.tolerance_band),
                _format_timestamp(rec.timestamp), rec.operator_id,
                _csv_field(int(rec.duration) if float(rec.duration).is_integer() else rec.duration),
                str(rec.repetition_index),
            )
            fh.write(",".join(row) + "\n")
            n += 1
    return n


def write_labels(labels: Sequence[AnomalyLabel], path: str | Path) -> int:
    with Path(path).open("w", encoding="utf-8") as fh:
        for lab in labels:
            fh.write(json.dumps({
                "record_id": lab.record_id,
                "is_anomaly": lab.is_anomaly,
                "injected_offset_mm": lab.injected_offset,
            }, separators=(",", ":")) + "\n")
    return len(labels)


def read_labels(path: str | Path) -> list[AnomalyLabel]:
    labels = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
                labels.append(AnomalyLabel(
                    record_id=str(doc["record_id"]),
                    is_anomaly=bool(doc["is_anomaly"]),
                    injected_offset=float(doc.get("injected_offset_mm", 0.0)),
                ))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise ParseError(f"bad label: {exc}", i) from exc
    return labels


class JsonlStore:
    """File-backed append-only store with the in-memory store's interface.

    Appends write the full line and flush before the record becomes
    visible to snapshot readers (write-then-publish).
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._records: list[MeasurementRecord] = (
            read_jsonl(self.path) if self.path.exists() else []
        )
        self._fh = self.path.open("a", encoding="utf-8")

    def append(self, record: MeasurementRecord) -> int:
        line = serialize_record(record) + "\n"
        with self._lock:
            self._fh.write(line)
            self._fh.flush()
            os.fsync(self._fh.fileno())
            self._records.append(record)  # publish after the write lands
            return len(self._records) - 1

    def snapshot(self) -> tuple[MeasurementRecord, ...]:
        with self._lock:
            return tuple(self._records)

    def since(self, seq: int) -> tuple[MeasurementRecord, ...]:
        with self._lock:
            return tuple(self._records[seq + 1:])

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)

    def close(self):
        with self._lock:
            self._fh.close()


# -- part catalog ------------------------------------------------------------

def part_to_dict(part: Part) -> dict:
    return {
        "part_id": part.part_id,
        "description": part.description,
        "geometry_class": part.geometry_class.value,
        "features": [
            {
                "feature_id": f.feature_id,
                "kind": f.kind.value,
                "nominal_value": f.nominal_value,
                "tolerance_band": f.tolerance_band,
            }
            for f in part.features
        ],
    }


def part_from_dict(doc: dict) -> Part:
    return Part(
        part_id=str(doc["part_id"]),
        description=str(doc.get("description", "")),
        geometry_class=GeometryClass(doc["geometry_class"]),
        features=tuple(
            DimensionFeature(
                feature_id=str(f["feature_id"]),
                kind=FeatureKind(f["kind"]),
                nominal_value=float(f["nominal_value"]),
                tolerance_band=float(f["tolerance_band"]),
            )
            for f in doc.get("features", [])
        ),
    )


def write_catalog(parts: Sequence[Part], path: str | Path):
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump([part_to_dict(p) for p in parts], fh, indent=2)


def read_catalog(path: str | Path) -> list[Part]:
    with Path(path).open("r", encoding="utf-8") as fh:
        return [part_from_dict(doc) for doc in json.load(fh)]
