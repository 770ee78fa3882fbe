"""Shared HTTP plumbing for the federation services (stdlib http.server)."""

from __future__ import annotations

import json
import logging
import signal
import socket
import sys
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable, Optional

log = logging.getLogger(__name__)

READY_PREFIX = "READY "


def split_addr(listen_addr: str) -> tuple[str, int]:
    host, _, port = listen_addr.rpartition(":")
    if not host:
        raise ValueError(f"listen_addr must be host:port, got {listen_addr!r}")
    return host, int(port)


class ServiceServer(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True
    request_queue_size = 256

    def __init__(self, listen_addr: str, handler_cls, app):
        super().__init__(split_addr(listen_addr), handler_cls)
        self.app = app

    def handle_error(self, request, client_address):
        exc = sys.exc_info()[1]
        if isinstance(exc, (BrokenPipeError, ConnectionResetError)):
            log.debug("client %s went away", client_address)
            return
        super().handle_error(request, client_address)

    @property
    def url(self) -> str:
        host, port = self.server_address[:2]
        return f"http://{host}:{port}"


class Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "solarfed/0.1"

    @property
    def app(self):
        return self.server.app

    def setup(self):
        super().setup()
        # headers and body go out in separate writes; don't let Nagle stall the second
        self.connection.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)

    def log_message(self, format, *args):
        log.debug("%s %s", self.address_string(), format % args)

    def read_body(self) -> bytes:
        length = int(self.headers.get("Content-Length") or 0)
        return self.rfile.read(length) if length else b""

    def read_json(self):
        return json.loads(self.read_body() or b"null")

    def send_json(self, status: int, payload, headers: Optional[dict] = None) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        for k, v in (headers or {}).items():
            self.send_header(k, v)
        self.end_headers()
        if self.command != "HEAD":
            self.wfile.write(body)

    def send_error_json(self, status: int, error: str, message: str = "", headers=None) -> None:
        self.send_json(status, {"error": error, "message": message}, headers)

    def send_empty(self, status: int, headers: Optional[dict] = None) -> None:
        self.send_response(status)
        for k, v in (headers or {}).items():
            self.send_header(k, v)
        self.send_header("Content-Length", "0")
        self.end_headers()


def serve(server: ServiceServer, on_stop: Callable[[], None] = lambda: None,
          background: list[Callable[[threading.Event], None]] = ()) -> None:
    """Run ``server`` until SIGTERM/SIGINT, announcing its URL on stdout first.

    ``background`` callables run in daemon threads and receive a stop event.
    """
    stop = threading.Event()

    def _terminate(signum, frame):
        stop.set()
        threading.Thread(target=server.shutdown, daemon=True).start()

    signal.signal(signal.SIGTERM, _terminate)
    signal.signal(signal.SIGINT, _terminate)
    for fn in background:
        threading.Thread(target=fn, args=(stop,), daemon=True).start()

    sys.stdout.write(READY_PREFIX + server.url + "\n")
    sys.stdout.flush()
    try:
        server.serve_forever(poll_interval=0.2)
    finally:
        stop.set()
        try:
            on_stop()
        finally:
            server.server_close()


def configure_logging(verbose: bool = False) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
        stream=sys.stderr,
    )


class BadRange(ValueError):
    pass


def parse_range(header: Optional[str], size: int) -> Optional[tuple[int, int]]:
    """Parse a single ``bytes=`` range into inclusive (start, end).

    Returns None when no Range header is present. Multi-range requests,
    ``start > end`` and ``start >= size`` raise BadRange; an ``end`` past
    the last byte is clamped.
    """
    if header is None:
        return None
    unit, _, spec = header.strip().partition("=")
    if unit.strip().lower() != "bytes" or not spec or "," in spec:
        raise BadRange(header)
    first, dash, last = spec.strip().partition("-")
    if not dash:
        raise BadRange(header)
    try:
        if first == "":
            # suffix form: the final N bytes
            n = int(last)
            if n <= 0 or size == 0:
                raise BadRange(header)
            return max(0, size - n), size - 1
        start = int(first)
        end = int(last) if last else size - 1
    except ValueError:
        raise BadRange(header) from None
    if start < 0 or start > end or start >= size:
        raise BadRange(header)
    return start, min(end, size - 1)


def copy_range(src, dst, length: int, chunk: int = 1 << 16) -> int:
    """Copy ``length`` bytes from ``src`` to ``dst``; returns bytes written."""
    moved = 0
    while moved < length:
        buf = src.read(min(chunk, length - moved))
        if not buf:
            break
        dst.write(buf)
        moved += len(buf)
    return moved


def register(director_url: str, payload: dict, attempts: int = 20) -> None:
    """POST a registration; retries only while the director is unreachable."""
    import requests

    url = director_url.rstrip("/") + "/api/v1/register"
    last: Exception | None = None
    for _ in range(attempts):
        try:
            resp = requests.post(url, json=payload, timeout=5)
        except requests.RequestException as exc:
            last = exc
            time.sleep(0.25)
            continue
        if resp.status_code != 200:
            raise RuntimeError(f"registration rejected ({resp.status_code}): {resp.text}")
        return
    raise RuntimeError(f"director unreachable: {last}")


def heartbeat_loop(director_url: str, payload_fn, interval: float):
    def run(stop: threading.Event):
        while not stop.wait(interval):
            try:
                register(director_url, payload_fn(), attempts=1)
            except Exception as exc:
                log.warning("heartbeat failed: %s", exc)
    return run


def client_name(handler) -> str:
    return handler.headers.get("X-Client-Name") or handler.client_address[0]


class ActiveTransfers:
    """Counts requests in progress so an accounting flush can wait them out."""

    def __init__(self):
        self._cond = threading.Condition()
        self._count = 0

    def __enter__(self):
        with self._cond:
            self._count += 1
        return self

    def __exit__(self, *exc):
        with self._cond:
            self._count -= 1
            if self._count == 0:
                self._cond.notify_all()

    def wait_idle(self, timeout: float) -> bool:
        with self._cond:
            return self._cond.wait_for(lambda: self._count == 0, timeout)


def flush_accounting(app, timeout: float = 30.0) -> bool:
    """Wait for in-flight transfers, then drain the app's record emitter."""
    if not app.active.wait_idle(timeout):
        return False
    return app.emitter.flush(timeout) if app.emitter else True
