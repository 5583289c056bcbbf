"""HTTP service exposing the twin: ingestion, stats, training, what-if,
alerts (JSON list or server-sent events), year simulation, and reports.

Built on the stdlib threading HTTP server: one writer path (ingestion)
against many concurrent readers, with alert push over SSE. All bodies
are JSON; errors are {"code": ..., "message": ...}.
"""

from __future__ import annotations

import json
import queue
import threading
from dataclasses import dataclass
from datetime import datetime
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .campaign import default_part_catalog
from .core import DeviceKind, GeometryClass
from .errors import (
    InsufficientDataError,
    ModelUnavailableError,
    ValidationError,
)
from .io import JsonlStore, read_catalog, read_labels, record_from_dict, record_to_dict
from .report import build_report
from .runtime import (
    RetrainInterval,
    RetrainingSchedule,
    TwinRuntime,
    WhatIfQuery,
    simulate_year,
    standard_year_feed,
    STANDARD_SIM_SPEC,
)
from .ml import RegressorSpec, RegressorKind

__all__ = ["ServiceConfig", "TwinService", "serve"]

_QUICK_SIM_SPEC = RegressorSpec(
    kind=RegressorKind.ENSEMBLE,
    hyperparameters={
        "rf": {"n_trees": 16, "max_depth": 7, "min_leaf": 2},
        "gb": {"n_rounds": 24, "learning_rate": 0.2, "depth": 3},
    },
    seed=0,
)


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8787
    data_dir: str | Path | None = None
    store_file: str = "campaign.jsonl"
    labels_file: str = "campaign.labels.jsonl"
    catalog_file: str = "catalog.json"
    seed: int = 0
    # wall-clock seconds between scheduled_update checks; 0 disables the
    # background trainer (the 24 h gate itself lives in the runtime)
    update_check_seconds: float = 60.0


def _status_for(exc: Exception) -> int:
    if isinstance(exc, (InsufficientDataError, ModelUnavailableError)):
        return 409
    if isinstance(exc, ValidationError):
        return 400
    return 500


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "metrotwin"

    # Quieter default logging; the service is often run under pytest.
    def log_message(self, fmt, *args):
        pass

    @property
    def svc(self) -> "TwinService":
        return self.server.service  # type: ignore[attr-defined]

    # -- plumbing ---------------------------------------------------------

    def _send_json(self, payload, status: int = 200):
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _send_error_json(self, exc: Exception):
        code = getattr(exc, "code", "internal")
        self._send_json({"code": code, "message": str(exc)}, _status_for(exc))

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b"{}"
        try:
            doc = json.loads(raw or b"{}")
        except json.JSONDecodeError as exc:
            raise ValidationError(f"malformed JSON body: {exc.msg}") from exc
        if not isinstance(doc, dict):
            raise ValidationError("expected a JSON object body")
        return doc

    def do_OPTIONS(self):
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    # -- routing ----------------------------------------------------------

    def do_GET(self):
        url = urlparse(self.path)
        params = {k: v[-1] for k, v in parse_qs(url.query).items()}
        try:
            if url.path == "/health":
                self._send_json({"status": "ok", "records": len(self.svc.runtime.store)})
            elif url.path == "/measurements":
                self._send_json(self.svc.list_measurements(params))
            elif url.path == "/stats/descriptive":
                self._send_json(self.svc.stats_descriptive(params))
            elif url.path == "/stats/regression":
                self._send_json(self.svc.stats_regression())
            elif url.path == "/models":
                self._send_json(self.svc.list_models())
            elif url.path == "/alerts":
                if params.get("stream") == "1" or "text/event-stream" in (
                        self.headers.get("Accept") or ""):
                    self._stream_alerts()
                else:
                    self._send_json(self.svc.list_alerts(params))
            elif url.path == "/report":
                self._send_json(self.svc.report(params))
            elif url.path == "/pipeline":
                self._send_json(self.svc.runtime.pipeline_stats().to_dict())
            else:
                self._send_json({"code": "not-found", "message": url.path}, 404)
        except BrokenPipeError:
            pass
        except Exception as exc:  # noqa: BLE001 - boundary translation
            self._send_error_json(exc)

    def do_POST(self):
        url = urlparse(self.path)
        try:
            body = self._read_body()
            if url.path == "/measurements":
                payload, status = self.svc.ingest(body)
                self._send_json(payload, status)
            elif url.path == "/train":
                self._send_json(self.svc.train(body))
            elif url.path == "/whatif":
                self._send_json(self.svc.what_if(body))
            elif url.path == "/simulate/year":
                self._send_json(self.svc.simulate(body))
            else:
                self._send_json({"code": "not-found", "message": url.path}, 404)
        except Exception as exc:  # noqa: BLE001 - boundary translation
            self._send_error_json(exc)

    # -- SSE ---------------------------------------------------------------

    def _stream_alerts(self):
        inbox: queue.Queue = queue.Queue()
        listener = inbox.put
        self.svc.runtime.subscribe(listener)
        try:
            self.send_response(200)
            self.send_header("Content-Type", "text/event-stream")
            self.send_header("Cache-Control", "no-cache")
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Connection", "close")
            self.end_headers()
            self.wfile.write(b"retry: 2000\n\n")
            self.wfile.flush()
            while not self.svc.shutting_down:
                try:
                    alert = inbox.get(timeout=0.5)
                except queue.Empty:
                    self.wfile.write(b": keepalive\n\n")
                    self.wfile.flush()
                    continue
                data = json.dumps(alert.to_dict())
                self.wfile.write(f"event: alert\ndata: {data}\n\n".encode("utf-8"))
                self.wfile.flush()
        except (BrokenPipeError, ConnectionResetError):
            pass
        finally:
            self.svc.runtime.unsubscribe(listener)


class TwinService:
    """Runtime plus HTTP front end; start() serves in a daemon thread."""

    def __init__(self, runtime: TwinRuntime | None = None,
                 config: ServiceConfig | None = None,
                 parts=None, labels=None):
        self.config = config or ServiceConfig()
        self.parts = parts if parts is not None else default_part_catalog()
        self.labels = labels
        self.shutting_down = False

        data_dir = Path(self.config.data_dir) if self.config.data_dir else None
        if runtime is not None:
            self.runtime = runtime
        else:
            store = None
            if data_dir is not None:
                data_dir.mkdir(parents=True, exist_ok=True)
                store = JsonlStore(data_dir / self.config.store_file)
                catalog_path = data_dir / self.config.catalog_file
                if catalog_path.exists():
                    self.parts = read_catalog(catalog_path)
                labels_path = data_dir / self.config.labels_file
                if labels_path.exists():
                    self.labels = read_labels(labels_path)
            self.runtime = TwinRuntime(
                store=store,
                schedule=RetrainingSchedule(),
            )
        if data_dir is not None:
            self._attach_persistence(data_dir)
        self._httpd = ThreadingHTTPServer(
            (self.config.host, self.config.port), _Handler)
        self._httpd.service = self  # type: ignore[attr-defined]
        self._thread: threading.Thread | None = None
        self._scheduler: threading.Thread | None = None
        self._stop_event = threading.Event()

    def _attach_persistence(self, data_dir: Path):
        # Gateway-side durability: alerts append to a JSONL log and every
        # published model version lands as its own document.
        alert_log = data_dir / "alerts.jsonl"
        models_dir = data_dir / "models"
        models_dir.mkdir(exist_ok=True)
        lock = threading.Lock()

        def on_alert(alert):
            with lock, alert_log.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(alert.to_dict()) + "\n")
                fh.flush()

        def on_publish(entry):
            doc = {"entry": entry.to_dict()}
            try:
                from .ml import model_to_dict
                doc["artifact"] = model_to_dict(entry.artifact)
            except Exception:
                doc["artifact"] = entry.spec  # linear bootstrap etc.
            path = models_dir / f"model_v{entry.version:04d}.json"
            path.write_text(json.dumps(doc))

        self.runtime.subscribe(on_alert)
        self.runtime.registry.subscribe(on_publish)

    @property
    def port(self) -> int:
        return self._httpd.server_address[1]

    def start(self) -> "TwinService":
        self._thread = threading.Thread(
            target=self._httpd.serve_forever, name="metrotwin-http", daemon=True)
        self._thread.start()
        if self.config.update_check_seconds > 0:
            self._scheduler = threading.Thread(
                target=self._scheduler_loop, name="metrotwin-trainer", daemon=True)
            self._scheduler.start()
        return self

    def _scheduler_loop(self):
        # Keeps retraining off the request path: the 24 h / new-row gates
        # are evaluated inside scheduled_update.
        while not self._stop_event.wait(self.config.update_check_seconds):
            try:
                self.runtime.scheduled_update()
            except Exception:
                pass  # failures already surface as RetrainingFailure alerts

    def stop(self):
        self.shutting_down = True
        self._stop_event.set()
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)
        if self._scheduler is not None:
            self._scheduler.join(timeout=5)

    # -- endpoint bodies ----------------------------------------------------

    def ingest(self, body: dict) -> tuple[dict, int]:
        body.setdefault("schema_version", 1)
        record = record_from_dict(body)
        ack = self.runtime.ingest(record)
        payload = {
            "sequence": ack.sequence,
            "record_id": ack.record_id,
            "duplicate": ack.duplicate,
            "alerts": [a.to_dict() for a in ack.alerts],
        }
        return payload, (200 if ack.duplicate else 201)

    def list_measurements(self, params: dict) -> dict:
        records = self.runtime.store.snapshot()
        since_seq = params.get("since_seq")
        start = int(since_seq) + 1 if since_seq is not None else 0
        selected = list(enumerate(records))[start:]
        if "device" in params:
            device = DeviceKind(params["device"])
            selected = [(i, r) for i, r in selected if r.device is device]
        if "from" in params:
            cutoff = datetime.fromisoformat(params["from"].replace("Z", "+00:00"))
            selected = [(i, r) for i, r in selected if r.timestamp >= cutoff]
        limit = int(params.get("limit", 1000))
        selected = selected[-limit:]
        return {
            "records": [dict(record_to_dict(r), sequence=i) for i, r in selected],
            "next_seq": len(records) - 1,
            "total": len(records),
        }

    def stats_descriptive(self, params: dict) -> dict:
        from .report import _device_stats_section
        section = _device_stats_section(self.runtime.store.snapshot())
        if "device" in params:
            device = DeviceKind(params["device"]).value
            devices = section["devices"]
            if device not in devices:
                raise InsufficientDataError(f"not enough records for {device}")
            return {device: devices[device]}
        return section

    def stats_regression(self) -> dict:
        from .report import _regression_section
        return _regression_section(self.runtime.store.snapshot())

    def train(self, body: dict) -> dict:
        cv = int(body.get("cv", self.runtime.cv_folds))
        self.runtime.cv_folds = cv
        entry = self.runtime.scheduled_update(force=True)
        if entry is None:
            raise InsufficientDataError(
                f"need at least {self.runtime.min_training_rows} stored records to train"
            )
        return entry.to_dict()

    def list_models(self) -> dict:
        entries = self.runtime.registry.entries()
        active = self.runtime.registry.active()
        return {
            "models": [e.to_dict() for e in entries],
            "active_version": active.version if active else None,
        }

    def what_if(self, body: dict) -> dict:
        def pick(*names, default=None, required=False):
            for name in names:
                if name in body:
                    return body[name]
            if required:
                raise ValidationError(f"missing field {names[0]!r}")
            return default

        query = WhatIfQuery(
            nominal_mm=float(pick("nominal_mm", "nominal", required=True)),
            device=DeviceKind(pick("device", required=True)),
            temperature_c=float(pick("temperature_c", "temperature", required=True)),
            geometry=GeometryClass(pick("geometry", default="Cylinder")),
            tolerance_band_mm=float(pick("tolerance_band_mm", default=0.05)),
        )
        return self.runtime.what_if(query).to_dict()

    def list_alerts(self, params: dict) -> dict:
        alerts = self.runtime.alerts()
        limit = int(params.get("limit", 200))
        return {"alerts": [a.to_dict() for a in alerts[-limit:]],
                "total": len(alerts)}

    def simulate(self, body: dict) -> dict:
        interval = RetrainInterval(str(body.get("schedule", "Quarterly")).capitalize())
        seed = int(body.get("seed", self.config.seed))
        profile = str(body.get("profile", "standard"))
        if profile == "quick":
            feed = standard_year_feed(seed=seed, initial_rows=96, weekly_rows=16)
            spec = _QUICK_SIM_SPEC
        elif profile == "standard":
            feed = standard_year_feed(seed=seed)
            spec = STANDARD_SIM_SPEC
        else:
            raise ValidationError(f"unknown profile {profile!r}")
        return simulate_year(interval, feed, spec=spec).to_dict()

    def report(self, params: dict) -> dict:
        tables = _parse_tables(params.get("tables", "1,2,4"))
        records = self.runtime.store.snapshot()
        stats = self.runtime.pipeline_stats().to_dict()
        stats["update_frequency_hours"] = self.runtime.schedule.update_cadence_hours
        return build_report(
            records,
            labels=self.labels,
            parts=self.parts,
            tables=tables,
            seed=int(params.get("seed", self.config.seed)),
            contamination=float(params.get("contamination", 0.05)),
            pipeline=stats,
        )


def _parse_tables(spec: str) -> list[int]:
    tables: list[int] = []
    for chunk in spec.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "-" in chunk:
            lo, hi = chunk.split("-", 1)
            tables.extend(range(int(lo), int(hi) + 1))
        else:
            tables.append(int(chunk))
    bad = [t for t in tables if t not in range(1, 7)]
    if bad:
        raise ValidationError(f"table numbers must be 1-6, got {bad}")
    return tables


def serve(config: ServiceConfig) -> TwinService:
    """Construct and start a service; returns the running instance."""
    return TwinService(config=config).start()
