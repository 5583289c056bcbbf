import json

import pytest

from metrotwin.campaign import build_design, generate_campaign, inject_anomalies
from metrotwin.io import (
    CSV_HEADER,
    JsonlStore,
    ParseError,
    parse_record,
    read_catalog,
    read_jsonl,
    read_labels,
    serialize_record,
    write_catalog,
    write_csv,
    write_jsonl,
    write_labels,
)


class TestRecordRoundTrip:
    def test_lossless(self, campaign_records):
        for rec in campaign_records[:50]:
            assert parse_record(serialize_record(rec)) == rec

    def test_line_stability(self, campaign_records):
        # serialize(parse(line)) == line: byte-stable storage format
        for rec in campaign_records[:50]:
            line = serialize_record(rec)
            assert serialize_record(parse_record(line)) == line

    def test_unknown_fields_preserved(self, campaign_records):
        doc = json.loads(serialize_record(campaign_records[0]))
        doc["vendor_note"] = "probe changed"
        doc["batch"] = 7
        rec = parse_record(json.dumps(doc))
        assert rec.extra["vendor_note"] == "probe changed"
        assert rec.extra["batch"] == 7
        round_tripped = json.loads(serialize_record(rec))
        assert round_tripped["vendor_note"] == "probe changed"

    def test_deviation_mismatch_rejected_with_line(self):
        doc = {
            "schema_version": 1, "record_id": "X", "part_id": "P01",
            "feature_id": "F", "device": "CMM", "temperature_c": 20.0,
            "humidity_pct": 50.0, "nominal_mm": 10.0, "measured_mm": 10.5,
            "deviation_mm": 0.1, "tolerance_band_mm": 0.05,
            "timestamp_utc": "2025-01-06T08:00:00Z", "operator_id": "op",
            "duration_s": 60, "repetition": 1,
        }
        with pytest.raises(ParseError) as err:
            parse_record(json.dumps(doc), line_no=17)
        assert "line 17" in str(err.value)

    def test_malformed_json(self):
        with pytest.raises(ParseError):
            parse_record("{not json", line_no=3)

    def test_missing_field(self):
        with pytest.raises(ParseError):
            parse_record('{"record_id": "x"}')


class TestJsonlFiles:
    def test_write_read_round_trip(self, campaign_records, tmp_path):
        path = tmp_path / "c.jsonl"
        assert write_jsonl(campaign_records, path) == 320
        assert read_jsonl(path) == list(campaign_records)

    def test_torn_tail_skipped(self, campaign_records, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(campaign_records[:5], path)
        with path.open("a") as fh:
            fh.write(serialize_record(campaign_records[5])[:40])  # no newline
        assert len(read_jsonl(path)) == 5

    def test_byte_identical_regeneration(self, catalog, tmp_path):
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        for path in (a, b):
            records = generate_campaign(build_design(catalog, seed=6), seed=6)
            write_jsonl(records, path)
        assert a.read_bytes() == b.read_bytes()


class TestCsvExport:
    def test_header_bit_exact(self, campaign_records, tmp_path, catalog):
        path = tmp_path / "c.csv"
        write_csv(campaign_records, path, parts=catalog)
        lines = path.read_text().splitlines()
        assert lines[0] == CSV_HEADER
        assert lines[0] == ("part_id,part_description,device,temperature_c,"
                            "humidity_pct,nominal_mm,measured_mm,deviation_mm,"
                            "tolerance_band_mm,timestamp_utc,operator_id,"
                            "duration_s,repetition")

    def test_campaign_exports_321_lines(self, campaign_records, tmp_path, catalog):
        path = tmp_path / "c.csv"
        write_csv(campaign_records, path, parts=catalog)
        assert len(path.read_text().splitlines()) == 321

    def test_description_from_catalog(self, campaign_records, tmp_path, catalog):
        path = tmp_path / "c.csv"
        write_csv(campaign_records[:1], path, parts=catalog)
        row = path.read_text().splitlines()[1].split(",")
        part = next(p for p in catalog if p.part_id == campaign_records[0].part_id)
        assert row[1] == part.description or part.description in ",".join(row)


class TestJsonlStore:
    def test_append_and_snapshot(self, campaign_records, tmp_path):
        store = JsonlStore(tmp_path / "store.jsonl")
        for i, rec in enumerate(campaign_records[:10]):
            assert store.append(rec) == i
        assert len(store) == 10
        assert store.snapshot() == tuple(campaign_records[:10])
        store.close()

    def test_reload_from_disk(self, campaign_records, tmp_path):
        path = tmp_path / "store.jsonl"
        store = JsonlStore(path)
        for rec in campaign_records[:7]:
            store.append(rec)
        store.close()
        reopened = JsonlStore(path)
        assert reopened.snapshot() == tuple(campaign_records[:7])
        reopened.close()

    def test_since(self, campaign_records, tmp_path):
        store = JsonlStore(tmp_path / "s.jsonl")
        for rec in campaign_records[:5]:
            store.append(rec)
        assert store.since(2) == tuple(campaign_records[3:5])
        store.close()


class TestLabelsAndCatalog:
    def test_labels_round_trip(self, campaign_records, tmp_path):
        _, labels = inject_anomalies(campaign_records, 0.05, seed=1)
        path = tmp_path / "labels.jsonl"
        write_labels(labels, path)
        assert read_labels(path) == labels

    def test_catalog_round_trip(self, catalog, tmp_path):
        path = tmp_path / "catalog.json"
        write_catalog(catalog, path)
        assert read_catalog(path) == catalog
