"""Loopback HTTP gateway serving the review UI.

The gateway is a local companion to one vault: it decrypts owned records for
display, proxies benchmark and public-ledger views, and accepts label
corrections that re-enter the platform as new training data. It binds to
127.0.0.1 only and shares all code paths with the CLI verbs.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from ..errors import SealnetError
from .ops import AnnotationCorrection, BadLabel, Client, IndexOutOfRange, NotOwner, NotReady

_ERROR_STATUS = {
    "NotOwner": 403,
    "IndexOutOfRange": 400,
    "BadLabel": 400,
    "NotReady": 404,
    "NotFound": 404,
    "UnknownChallenge": 404,
}


class GatewayApi:
    """Route table shared by the HTTP server and in-process tests."""

    def __init__(self, client: Client):
        self.client = client
        self._lock = threading.Lock()

    def handle(self, method: str, path: str, body: dict | None = None) -> tuple[int, dict]:
        with self._lock:
            try:
                return self._dispatch(method, path, body or {})
            except SealnetError as exc:
                name = type(exc).__name__
                return _ERROR_STATUS.get(name, 409), {"error": name, "detail": str(exc)}
            except (KeyError, ValueError) as exc:
                return 400, {"error": type(exc).__name__, "detail": str(exc)}

    def _dispatch(self, method: str, path: str, body: dict) -> tuple[int, dict]:
        vault = self.client.vault
        orch = self.client.orchestrator

        if method == "GET" and path == "/api/records":
            records = []
            for record_id, meta in sorted(vault.record_meta.items()):
                task_id = next(
                    (t for t, r in vault.predict_tasks.items() if r == record_id), None
                )
                records.append(
                    {
                        "record_id": record_id,
                        "kind": meta.get("kind"),
                        "challenge_id": meta.get("challenge_id"),
                        "rows": meta.get("rows"),
                        "dimension": meta.get("dimension"),
                        "prediction_task_id": task_id,
                    }
                )
            return 200, {"records": records}

        if method == "GET" and path.startswith("/api/records/") and path.endswith("/rows"):
            record_id = path[len("/api/records/") : -len("/rows")]
            dataset = self.client.decrypt_record(record_id)
            predicted = None
            task_id = next((t for t, r in vault.predict_tasks.items() if r == record_id), None)
            if task_id is not None:
                try:
                    predicted = self.client.fetch_prediction(task_id)
                except NotReady:
                    predicted = None
            return 200, {
                "record_id": record_id,
                "columns": dataset.columns,
                "rows": [[float(v) for v in dataset.features[i]] for i in range(len(dataset))],
                "labels": dataset.labels,
                "predicted_labels": predicted,
                "prediction_task_id": task_id,
            }

        if method == "GET" and path.startswith("/api/predictions/"):
            task_id = path[len("/api/predictions/") :]
            try:
                labels = self.client.fetch_prediction(task_id)
            except NotReady:
                return 200, {"task_id": task_id, "status": "pending", "labels": None}
            return 200, {"task_id": task_id, "status": "done", "labels": labels}

        if method == "POST" and path == "/api/corrections":
            correction = AnnotationCorrection(
                source_record_id=body["source_record_id"],
                row_index=int(body["row_index"]),
                corrected_label=body["corrected_label"],
                annotator=vault.account_id,
            )
            record_id = self.client.submit_correction(correction)
            return 200, {"record_id": record_id}

        if method == "GET" and path.startswith("/api/benchmark/"):
            rows = self.client.benchmark(path[len("/api/benchmark/") :])
            return 200, {"rows": [r.to_dict() for r in rows]}

        if method == "GET" and path == "/api/challenges":
            return 200, {
                "challenges": [spec.to_dict() for _, spec in sorted(orch.challenges.items())]
            }

        if method == "GET" and path == "/api/tasks":
            tasks = [
                t.to_dict()
                for t in sorted(orch.tasks.values(), key=lambda t: t.task_id)
                if t.status != "done"
            ]
            return 200, {"tasks": tasks}

        if method == "GET" and path == "/api/audit":
            return 200, self.client.audit().to_dict()

        return 404, {"error": "NotFound", "detail": f"no route {method} {path}"}


_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".map": "application/json",
    ".svg": "image/svg+xml",
}


def make_server(api: GatewayApi, port: int = 0, static_dir: str | Path | None = None) -> ThreadingHTTPServer:
    """HTTP server on 127.0.0.1; static_dir, when given, is served at /."""

    static_root = Path(static_dir).resolve() if static_dir else None

    class Handler(BaseHTTPRequestHandler):
        def log_message(self, *args):  # quiet
            pass

        def _send(self, status: int, payload: dict) -> None:
            data = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def _serve_static(self) -> None:
            rel = self.path.lstrip("/") or "index.html"
            target = (static_root / rel).resolve()
            if not str(target).startswith(str(static_root)) or not target.is_file():
                self.send_response(404)
                self.end_headers()
                return
            data = target.read_bytes()
            self.send_response(200)
            self.send_header(
                "Content-Type", _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
            )
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def do_GET(self):
            if self.path.startswith("/api/"):
                status, payload = api.handle("GET", self.path)
                self._send(status, payload)
            elif static_root is not None:
                self._serve_static()
            else:
                self._send(404, {"error": "NotFound"})

        def do_POST(self):
            length = int(self.headers.get("Content-Length", "0"))
            raw = self.rfile.read(length) if length else b"{}"
            try:
                body = json.loads(raw or b"{}")
            except json.JSONDecodeError:
                self._send(400, {"error": "BadRequest", "detail": "body is not JSON"})
                return
            status, payload = api.handle("POST", self.path, body)
            self._send(status, payload)

    return ThreadingHTTPServer(("127.0.0.1", port), Handler)


def serve_forever_in_thread(server: ThreadingHTTPServer) -> threading.Thread:
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return thread
