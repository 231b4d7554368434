"""HTTP server speaking the classification wire protocol.

    request  {"request_id": str, "essay_id": str, "segments": [str],
              "boundary_token": "[SEP]"}
    response {"request_id": str, "distributions": [{"<label>": float x 9}]}

Malformed requests get 400 with {"error": str}; internal failures 500.
Requests are handled concurrently; model inference serializes on a lock
(the loaded weights are the only shared state).
"""
from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .model import EncoderBackend, load_checkpoint


class ProtocolError(ValueError):
    pass


def validate_request(payload) -> tuple[str, list[str]]:
    if not isinstance(payload, dict):
        raise ProtocolError("request body must be a JSON object")
    request_id = payload.get("request_id")
    if not isinstance(request_id, str) or not request_id:
        raise ProtocolError("missing request_id")
    segments = payload.get("segments")
    if not isinstance(segments, list) or not segments or not all(
        isinstance(s, str) for s in segments
    ):
        raise ProtocolError("segments must be a non-empty list of strings")
    return request_id, segments


class ClassifierService:
    def __init__(self, backend: EncoderBackend):
        self.backend = backend
        self._lock = threading.Lock()

    def handle(self, payload) -> dict:
        request_id, segments = validate_request(payload)
        with self._lock:
            distributions = self.backend.classify_segments(segments)
        return {"request_id": request_id, "distributions": distributions}


def make_server(backend: EncoderBackend, port: int = 0) -> ThreadingHTTPServer:
    service = ClassifierService(backend)

    class Handler(BaseHTTPRequestHandler):
        def _send(self, status: int, body: dict) -> None:
            data = json.dumps(body).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def do_POST(self):
            length = int(self.headers.get("Content-Length", 0))
            raw = self.rfile.read(length)
            try:
                payload = json.loads(raw.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError):
                self._send(400, {"error": "request body is not valid JSON"})
                return
            try:
                self._send(200, service.handle(payload))
            except ProtocolError as exc:
                self._send(400, {"error": str(exc)})
            except Exception as exc:  # pragma: no cover - defensive
                self._send(500, {"error": f"internal error: {exc}"})

        def log_message(self, *args):
            pass

    return ThreadingHTTPServer(("127.0.0.1", port), Handler)


def serve(checkpoint: str, port: int) -> None:
    backend = load_checkpoint(checkpoint)
    server = make_server(backend, port)
    host, bound_port = server.server_address
    print(f"serving on http://{host}:{bound_port}/classify")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
