"""HTTP service: board, model info, and prediction endpoints for the UI.

All shared state (checkpoint, board, decoder) is loaded once at startup and
never mutated, so concurrent requests are safe.  Errors are returned as
{"error": {"code", "message"}} with a 4xx/5xx status.
"""

from __future__ import annotations

import json
import logging
import mimetypes
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from . import checkpoint as ckpt_io
from .board import Board, board_to_dict, load_board, sample_board
from .model import Checkpoint
from .prediction import (
    CardDecoder,
    PredictionError,
    Query,
    build_decoder,
    predict_cards,
    prediction_items,
)
from .roles import Role

log = logging.getLogger(__name__)


@dataclass
class ServiceConfig:
    checkpoint_path: str
    board_path: str
    host: str = "127.0.0.1"
    port: int = 8765
    mode: str = "cs"
    default_k: int = 12
    assets_dir: str | None = None


class AppState:
    """Immutable artifacts the handlers read from."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.ckpt: Checkpoint = ckpt_io.load_checkpoint(config.checkpoint_path)
        self.board: Board = (
            sample_board() if config.board_path == "sample" else load_board(config.board_path)
        )
        self.decoder: CardDecoder = build_decoder(self.board, self.ckpt)
        self.fingerprint = self.decoder.fingerprint
        self.assets = Path(config.assets_dir).resolve() if config.assets_dir else None
        if self.assets and not self.assets.is_dir():
            raise FileNotFoundError(f"assets directory not found: {self.assets}")


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    @property
    def state(self) -> AppState:
        return self.server.app_state  # type: ignore[attr-defined]

    def log_message(self, fmt, *args):  # quiet by default
        log.debug("%s - %s", self.address_string(), fmt % args)

    def _send(self, status: int, body: bytes, content_type: str) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _json(self, status: int, payload) -> None:
        body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
        self._send(status, body, "application/json; charset=utf-8")

    def _error(self, status: int, code: str, message: str) -> None:
        self._json(status, {"error": {"code": code, "message": message}})

    def do_OPTIONS(self):
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self):
        state = self.state
        path = self.path.split("?", 1)[0]
        if path == "/health":
            self._json(200, {"status": "ok", "model": state.fingerprint})
        elif path == "/board":
            doc = board_to_dict(state.board)
            doc["role_colors"] = {
                role.value: color for role, color in state.board.colors().items()
            }
            self._json(200, doc)
        elif path == "/model/info":
            self._json(
                200,
                {
                    "config": {
                        "vocab_size": state.ckpt.config.vocab_size,
                        "hidden": state.ckpt.config.hidden,
                        "n_layers": state.ckpt.config.n_layers,
                        "n_heads": state.ckpt.config.n_heads,
                        "ff_size": state.ckpt.config.ff_size,
                        "max_seq": state.ckpt.config.max_seq,
                        "dropout": state.ckpt.config.dropout,
                    },
                    "fingerprint": state.fingerprint,
                    "meta": state.ckpt.meta,
                    "mode": state.config.mode,
                    "default_k": state.config.default_k,
                },
            )
        elif state.assets is not None:
            self._serve_static(path)
        else:
            self._error(404, "not_found", f"no route for {path}")

    def _serve_static(self, path: str) -> None:
        state = self.state
        rel = path.lstrip("/") or "index.html"
        target = (state.assets / rel).resolve()
        if not str(target).startswith(str(state.assets)) or not target.is_file():
            self._error(404, "not_found", f"no route for {path}")
            return
        ctype = mimetypes.guess_type(target.name)[0] or "application/octet-stream"
        self._send(200, target.read_bytes(), ctype)

    def do_POST(self):
        if self.path.split("?", 1)[0] != "/predict":
            self._error(404, "not_found", f"no route for {self.path}")
            return
        state = self.state
        try:
            length = int(self.headers.get("Content-Length", 0))
            body = json.loads(self.rfile.read(length) or b"{}")
        except (ValueError, json.JSONDecodeError):
            self._error(400, "bad_request", "body must be valid JSON")
            return
        try:
            query = self._parse_query(body)
        except (KeyError, ValueError, PredictionError) as exc:
            self._error(400, "bad_request", str(exc))
            return
        try:
            prediction = predict_cards(query, state.ckpt, state.decoder)
        except PredictionError as exc:
            self._error(500, "prediction_failed", str(exc))
            return
        self._json(
            200,
            {
                "items": prediction_items(prediction, state.board),
                "mode": query.mode,
                "mask_role": query.mask_role.value if query.mask_role else None,
                "k": query.k,
                "model": state.fingerprint,
            },
        )

    def _parse_query(self, body: dict) -> Query:
        state = self.state
        mode = body.get("mode", state.config.mode)
        k = body.get("k", state.config.default_k)
        if not isinstance(k, int) or k < 1:
            raise ValueError("k must be a positive integer")
        if mode == "cs":
            slots = body.get("slots") or {}
            if not isinstance(slots, dict):
                raise ValueError("slots must be an object of role -> text")
            filled = {Role.from_name(name): str(text) for name, text in slots.items()}
            mask_name = body.get("mask_role")
            if not mask_name:
                raise ValueError("cs query needs mask_role")
            return Query(
                mode="cs", filled=filled, mask_role=Role.from_name(mask_name), k=k
            )
        if mode == "flat":
            return Query(mode="flat", prefix=str(body.get("prefix", "")), k=k)
        raise ValueError(f"unknown mode {mode!r}")


def make_server(config: ServiceConfig) -> ThreadingHTTPServer:
    """Load all artifacts, then bind; the server is ready when this returns."""
    state = AppState(config)
    server = ThreadingHTTPServer((config.host, config.port), _Handler)
    server.app_state = state  # type: ignore[attr-defined]
    return server


def serve_forever(config: ServiceConfig) -> None:
    server = make_server(config)
    host, port = server.server_address[:2]
    log.info("serving on http://%s:%s (model %s)", host, port,
             server.app_state.fingerprint)  # type: ignore[attr-defined]
    try:
        server.serve_forever()
    finally:
        server.server_close()


def start_background(config: ServiceConfig) -> tuple[ThreadingHTTPServer, threading.Thread]:
    """Run the server on a daemon thread; used by tests and demos."""
    server = make_server(config)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server, thread
