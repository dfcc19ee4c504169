"""Local HTTP service backing the frame labeling UI.

Endpoints (localhost, JSON, UTF-8):
  GET  /api/frames                 -> ["frame_000001", ...] in temporal order
  GET  /api/frames/{id}/image      -> PNG bytes
  GET  /api/labels                 -> {"frame_000001": "Keep", ...}
  POST /api/frames/{id}/label      -> body {"label": "Keep"|...}; durable append
  GET  /api/progress               -> {"labeled": n, "total": m, "roi": [x,y,w,h]?}
  GET  /                           -> static UI assets

Label appends are serialized through the store's writer lock and fsynced
before the response goes out, so a killed service loses at most the label
whose response never arrived.
"""

from __future__ import annotations

import json
import re
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from importlib import resources
from pathlib import Path

from .dataio import LabelStore, list_frames
from .features import BehaviorLabel, RoiSpec

_FRAME_ID = re.compile(r"^[A-Za-z0-9_.-]+$")
_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".png": "image/png",
    ".svg": "image/svg+xml",
    ".map": "application/json",
    ".ico": "image/x-icon",
}


class LabelingHandler(BaseHTTPRequestHandler):
    server_version = "lanecue"
    protocol_version = "HTTP/1.1"

    # ----- helpers -------------------------------------------------------
    def _send(self, status: int, body: bytes, content_type: str) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _json(self, status: int, payload) -> None:
        body = json.dumps(payload).encode("utf-8")
        self._send(status, body, "application/json; charset=utf-8")

    def _error(self, status: int, message: str) -> None:
        self._json(status, {"error": message})

    def log_message(self, fmt, *args):  # quiet by default
        if self.server.verbose:
            super().log_message(fmt, *args)

    # ----- routing -------------------------------------------------------
    def do_GET(self):
        path = self.path.split("?", 1)[0]
        try:
            if path == "/api/frames":
                self._json(200, self.server.frame_ids())
            elif path == "/api/labels":
                labels = self.server.store.labels()
                self._json(200, {fid: label.tag for fid, label in labels.items()})
            elif path == "/api/progress":
                self._json(200, self.server.progress())
            elif path.startswith("/api/frames/") and path.endswith("/image"):
                self._frame_image(path[len("/api/frames/") : -len("/image")])
            elif path.startswith("/api/"):
                self._error(404, f"unknown endpoint {path}")
            else:
                self._static(path)
        except BrokenPipeError:
            pass
        except Exception as exc:  # surface handler bugs as JSON, keep serving
            self._error(500, f"internal error: {exc}")

    def do_POST(self):
        path = self.path.split("?", 1)[0]
        try:
            match = re.fullmatch(r"/api/frames/([^/]+)/label", path)
            if not match:
                self._error(404, f"unknown endpoint {path}")
                return
            self._assign_label(match.group(1))
        except BrokenPipeError:
            pass
        except Exception as exc:
            self._error(500, f"internal error: {exc}")

    # ----- endpoint bodies -------------------------------------------------
    def _frame_image(self, frame_id: str) -> None:
        if not _FRAME_ID.match(frame_id):
            self._error(400, f"invalid frame id {frame_id!r}")
            return
        path = Path(self.server.frames_dir) / f"{frame_id}.png"
        if not path.is_file():
            self._error(404, f"no frame {frame_id}")
            return
        self._send(200, path.read_bytes(), "image/png")

    def _assign_label(self, frame_id: str) -> None:
        if not _FRAME_ID.match(frame_id) or frame_id not in set(self.server.frame_ids()):
            self._error(404, f"no frame {frame_id}")
            return
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        try:
            payload = json.loads(raw.decode("utf-8")) if raw else {}
        except (json.JSONDecodeError, UnicodeDecodeError):
            self._error(400, "body must be JSON")
            return
        tag = payload.get("label") if isinstance(payload, dict) else None
        if not isinstance(tag, str):
            self._error(400, "missing label")
            return
        try:
            label = BehaviorLabel.from_tag(tag)
        except ValueError:
            self._error(400, f"unknown label {tag!r}")
            return
        self.server.store.assign(frame_id, label, time.time())
        self._json(200, {"ok": True, "frame_id": frame_id, "label": label.tag})

    def _static(self, path: str) -> None:
        name = "index.html" if path in ("/", "") else path.lstrip("/")
        if "/" in name or not _FRAME_ID.match(name):
            self._send(404, b"not found", "text/plain; charset=utf-8")
            return
        asset = resources.files("lanecue").joinpath("static", name)
        if not asset.is_file():
            self._send(404, b"not found", "text/plain; charset=utf-8")
            return
        ctype = _CONTENT_TYPES.get(Path(name).suffix, "application/octet-stream")
        self._send(200, asset.read_bytes(), ctype)


class LabelingServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address, frames_dir, labels_file, roi: RoiSpec | None, verbose: bool):
        super().__init__(address, LabelingHandler)
        self.frames_dir = str(frames_dir)
        self.store = LabelStore(labels_file)
        self.roi = roi
        self.verbose = verbose

    def frame_ids(self) -> list[str]:
        return list_frames(self.frames_dir)

    def progress(self) -> dict:
        frames = set(self.frame_ids())
        labeled = sum(1 for fid in self.store.labels() if fid in frames)
        out = {"labeled": labeled, "total": len(frames)}
        if self.roi is not None:
            out["roi"] = list(self.roi.rect)
        return out


def serve(frames_dir, labels_file, port: int = 8765, host: str = "127.0.0.1",
          roi: RoiSpec | None = None, verbose: bool = False) -> LabelingServer:
    """Bind the labeling service; caller runs serve_forever()."""
    list_frames(frames_dir)  # fail fast on a missing directory
    return LabelingServer((host, port), frames_dir, labels_file, roi, verbose)
