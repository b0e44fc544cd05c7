"""HTTP annotation service: serves records to two annotators, records
their labels in the append-only log CSV, and reports progress and live
agreement.

State lives in memory behind one lock and every accepted label is
appended to the log before the in-memory copy changes, so killing the
process loses nothing: a restart replays the log and lands in the same
state. The log file format is the annotation module's, which keeps the
batch tools and the service interchangeable.
"""

from __future__ import annotations

import json
import threading
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Callable, Optional
from urllib.parse import parse_qs, urlparse

import numpy as np

from .agreement import (
    AnnotationSet,
    LabelEvent,
    append_label_event,
    cohens_kappa,
    confusion_matrix,
    read_label_log,
)
from .corpus import LABELS, Record
from .errors import EmptyOverlapError, UndefinedKappaError, ValidationError
from .seeding import derive_seed

DEFAULT_PORT = 8731
DEFAULT_ANNOTATORS = ("annotator_1", "annotator_2")

GUIDELINE = (
    "Read the record carefully before choosing a label. "
    "R (radical): the text provokes, motivates, or justifies violent "
    "extremism. NR (non-radical): the text is on topic but does not "
    "provoke. I (irrelevant): the text is off topic."
)


def _utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S")


class AnnotationState:
    """Label bookkeeping for exactly two annotators over a fixed corpus.

    Both annotators walk the same seeded shuffle of the records. All
    public methods take the lock, so readers always see a fully applied
    event or none of it.
    """

    def __init__(
        self,
        records: list[Record],
        log_path: str | Path,
        annotators: tuple[str, str] = DEFAULT_ANNOTATORS,
        seed: int = 0,
        clock: Optional[Callable[[], str]] = None,
    ):
        if len(annotators) != 2 or len(set(annotators)) != 2:
            raise ValidationError("exactly two distinct annotator ids required")
        if not records:
            raise ValidationError("service needs at least one record")
        self.annotators = tuple(annotators)
        self._records = {}
        for rec in records:
            if rec.id in self._records:
                raise ValidationError(f"duplicate record id {rec.id!r}")
            self._records[rec.id] = rec
        order = np.random.default_rng(derive_seed(seed, "service-queue")).permutation(
            len(records)
        )
        ids = list(self._records)
        self.queue = [ids[i] for i in order]
        self.log_path = Path(log_path)
        self._labels: dict[tuple[str, str], str] = {}
        self._clock = clock or _utc_now
        self._lock = threading.Lock()
        if self.log_path.exists():
            self._replay()

    def _replay(self) -> None:
        for ev in read_label_log(self.log_path):
            if ev.annotator_id not in self.annotators:
                raise ValidationError(f"log names unknown annotator {ev.annotator_id!r}")
            if ev.record_id not in self._records:
                raise ValidationError(f"log names unknown record {ev.record_id!r}")
            self._labels[(ev.record_id, ev.annotator_id)] = ev.label

    def _require_annotator(self, annotator_id: str) -> None:
        if annotator_id not in self.annotators:
            raise KeyError(f"unknown annotator {annotator_id!r}")

    def _labeled_count(self, annotator_id: str) -> int:
        return sum(1 for (_, aid) in self._labels if aid == annotator_id)

    def _annotator_progress(self, annotator_id: str) -> dict:
        labeled = self._labeled_count(annotator_id)
        total = len(self.queue)
        return {
            "labeled": labeled,
            "total": total,
            "percent": round(100.0 * labeled / total, 2),
        }

    def next_record(self, annotator_id: str) -> tuple[Optional[Record], dict]:
        """First queue record this annotator has not labeled, or None."""
        with self._lock:
            self._require_annotator(annotator_id)
            for rid in self.queue:
                if (rid, annotator_id) not in self._labels:
                    return self._records[rid], self._annotator_progress(annotator_id)
            return None, self._annotator_progress(annotator_id)

    def submit(self, record_id: str, annotator_id: str, label: str) -> dict:
        """Append the event to the log, then apply it in memory."""
        with self._lock:
            self._require_annotator(annotator_id)
            if record_id not in self._records:
                raise KeyError(f"unknown record {record_id!r}")
            if label not in LABELS:
                raise ValidationError(f"label must be one of {LABELS}")
            event = LabelEvent(
                record_id=record_id,
                annotator_id=annotator_id,
                label=label,
                timestamp=self._clock(),
            )
            append_label_event(event, self.log_path)
            self._labels[(record_id, annotator_id)] = label
            return self._annotator_progress(annotator_id)

    def _annotation_sets(self) -> dict[str, AnnotationSet]:
        per: dict[str, dict[str, str]] = {aid: {} for aid in self.annotators}
        for (rid, aid), lab in self._labels.items():
            per[aid][rid] = lab
        return {
            aid: AnnotationSet(annotator_id=aid, labels=mapping)
            for aid, mapping in per.items()
        }

    def kappa(self) -> dict:
        """Live agreement over co-labeled records; a marker when there is
        no overlap or the matrix makes kappa undefined."""
        with self._lock:
            sets = self._annotation_sets()
            a, b = (sets[aid] for aid in self.annotators)
            try:
                report = cohens_kappa(confusion_matrix(a, b))
            except EmptyOverlapError:
                return {"available": False, "reason": "no co-labeled records yet"}
            except UndefinedKappaError:
                return {
                    "available": False,
                    "reason": "agreement is degenerate; kappa undefined",
                }
            return {
                "available": True,
                "kappa": report.kappa,
                "p_o": report.p_o,
                "p_e": report.p_e,
                "n": report.n,
            }

    def progress(self) -> dict:
        with self._lock:
            labeled_by = {aid: set() for aid in self.annotators}
            for rid, aid in self._labels:
                labeled_by[aid].add(rid)
            co = len(labeled_by[self.annotators[0]] & labeled_by[self.annotators[1]])
            return {
                "total": len(self.queue),
                "annotators": {
                    aid: self._annotator_progress(aid) for aid in self.annotators
                },
                "co_labeled": co,
            }


def _record_json(rec: Record) -> dict:
    return {
        "id": rec.id,
        "title": rec.title,
        "body": rec.body,
        "source_name": rec.source_name,
        "source_type": rec.source_type,
        "date": str(rec.date),
        "language": rec.language,
    }


_FALLBACK_PAGE = """<!DOCTYPE html>
<html><head><meta charset="utf-8"><title>annotation console</title></head>
<body>
<h1>Annotation service</h1>
<p>No console assets are installed. The JSON API is live:</p>
<ul>
<li>GET /api/next?annotator=ID</li>
<li>POST /api/label</li>
<li>GET /api/kappa</li>
<li>GET /api/progress</li>
</ul>
</body></html>
"""

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".svg": "image/svg+xml",
    ".json": "application/json",
    ".map": "application/json",
    ".ico": "image/x-icon",
}


class _Handler(BaseHTTPRequestHandler):
    state: AnnotationState
    static_dir: Optional[Path]

    def log_message(self, fmt, *args):
        pass

    def _send_json(self, code: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _serve_static(self, path: str) -> None:
        name = "index.html" if path == "/" else path.lstrip("/")
        if self.static_dir is not None:
            target = (self.static_dir / name).resolve()
            if (
                target.is_file()
                and self.static_dir.resolve() in target.parents
            ):
                body = target.read_bytes()
                ctype = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
                self.send_response(200)
                self.send_header("Content-Type", ctype)
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)
                return
        if path == "/":
            body = _FALLBACK_PAGE.encode("utf-8")
            self.send_response(200)
            self.send_header("Content-Type", "text/html; charset=utf-8")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)
            return
        self._send_json(404, {"error": "not found"})

    def do_GET(self):
        url = urlparse(self.path)
        if url.path == "/api/next":
            params = parse_qs(url.query)
            annotator = (params.get("annotator") or [""])[0]
            try:
                record, prog = self.state.next_record(annotator)
            except KeyError as exc:
                self._send_json(404, {"error": str(exc)})
                return
            self._send_json(
                200,
                {
                    "done": record is None,
                    "record": None if record is None else _record_json(record),
                    "guideline": GUIDELINE,
                    "progress": prog,
                },
            )
        elif url.path == "/api/kappa":
            self._send_json(200, self.state.kappa())
        elif url.path == "/api/progress":
            self._send_json(200, self.state.progress())
        else:
            self._serve_static(url.path)

    def do_POST(self):
        url = urlparse(self.path)
        if url.path != "/api/label":
            self._send_json(404, {"error": "not found"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            payload = json.loads(self.rfile.read(length) or b"{}")
            record_id = payload["record_id"]
            annotator_id = payload["annotator_id"]
            label = payload["label"]
        except (ValueError, KeyError, TypeError):
            self._send_json(400, {"error": "body must carry record_id, annotator_id, label"})
            return
        try:
            prog = self.state.submit(record_id, annotator_id, label)
        except KeyError as exc:
            self._send_json(404, {"error": str(exc)})
            return
        except ValidationError as exc:
            self._send_json(400, {"error": str(exc)})
            return
        self._send_json(200, {"ok": True, **prog})


def build_server(
    state: AnnotationState,
    host: str = "127.0.0.1",
    port: int = DEFAULT_PORT,
    static_dir: str | Path | None = None,
) -> ThreadingHTTPServer:
    """Bound but not yet serving; call serve_forever() (or run_service)."""
    handler = type(
        "BoundHandler",
        (_Handler,),
        {
            "state": state,
            "static_dir": Path(static_dir) if static_dir is not None else None,
        },
    )
    return ThreadingHTTPServer((host, port), handler)


def run_service(
    state: AnnotationState,
    host: str = "127.0.0.1",
    port: int = DEFAULT_PORT,
    static_dir: str | Path | None = None,
) -> None:
    server = build_server(state, host, port, static_dir)
    try:
        server.serve_forever()
    finally:
        server.server_close()
