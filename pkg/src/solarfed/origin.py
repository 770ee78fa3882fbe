"""Origin service: exports one local directory as a federation prefix."""

from __future__ import annotations

import argparse
import json
import logging
import os
import shutil
import sys
import tempfile
import threading
import time
from dataclasses import dataclass
from typing import Optional
from urllib.parse import urlsplit

from . import _http
from .accounting import RecordEmitter, TransferRecord
from .geo import GeoPoint
from .namespace import MalformedPath, ObjectPath, normalize_path, path_from_url

log = logging.getLogger(__name__)

TMP_PREFIX = ".tmp-"


class Forbidden(PermissionError):
    pass


class NotFound(FileNotFoundError):
    pass


class StorageFull(OSError):
    pass


@dataclass
class OriginConfig:
    name: str
    prefix: str
    root_dir: str
    director_url: str
    listen_addr: str = "127.0.0.1:0"
    lat: float = 0.0
    lon: float = 0.0
    heartbeat_s: float = 100.0
    capacity_bytes: Optional[int] = None

    def __post_init__(self):
        self.prefix = str(normalize_path(self.prefix))
        if not os.path.isdir(self.root_dir):
            raise ValueError(f"root_dir {self.root_dir!r} is not a directory")

    @property
    def location(self) -> GeoPoint:
        return GeoPoint(self.lat, self.lon)

    @classmethod
    def load(cls, path) -> "OriginConfig":
        with open(path, encoding="utf-8") as fh:
            return cls(**json.load(fh))


class OriginStore:
    """Maps federation paths under one prefix onto files under ``root_dir``."""

    def __init__(self, prefix, root_dir, capacity_bytes: Optional[int] = None):
        self.prefix = normalize_path(prefix)
        self.root = os.path.realpath(root_dir)
        self.capacity_bytes = capacity_bytes
        self._put_lock = threading.Lock()

    def local_path(self, path: ObjectPath) -> str:
        if not path.is_under(self.prefix) or path == self.prefix:
            raise Forbidden(f"{path} is outside prefix {self.prefix}")
        rel = path.relative_to(self.prefix)
        if any(seg.startswith(TMP_PREFIX) for seg in rel):
            raise NotFound(str(path))
        candidate = os.path.realpath(os.path.join(self.root, *rel))
        if os.path.commonpath([self.root, candidate]) != self.root or candidate == self.root:
            raise Forbidden(f"{path} escapes the origin root")
        return candidate

    def stat_object(self, path: ObjectPath) -> dict:
        local = self.local_path(path)
        try:
            st = os.stat(local)
        except FileNotFoundError:
            raise NotFound(str(path)) from None
        if not os.path.isfile(local):
            raise NotFound(str(path))
        return {"size": st.st_size, "mtime": st.st_mtime}

    def open_object(self, path: ObjectPath):
        local = self.local_path(path)
        if not os.path.isfile(local):
            raise NotFound(str(path))
        try:
            return open(local, "rb")
        except FileNotFoundError:
            raise NotFound(str(path)) from None

    def _used_bytes(self) -> int:
        total = 0
        for dirpath, _, files in os.walk(self.root):
            for f in files:
                try:
                    total += os.path.getsize(os.path.join(dirpath, f))
                except OSError:
                    pass
        return total

    def check_space(self, path: ObjectPath, length: int) -> None:
        local = self.local_path(path)
        parent = os.path.dirname(local)
        probe = parent if os.path.isdir(parent) else self.root
        if shutil.disk_usage(probe).free < length:
            raise StorageFull(f"volume cannot hold {length} bytes")
        if self.capacity_bytes is not None:
            existing = os.path.getsize(local) if os.path.isfile(local) else 0
            if self._used_bytes() - existing + length > self.capacity_bytes:
                raise StorageFull(f"origin capacity {self.capacity_bytes} exceeded")

    def put_object(self, path: ObjectPath, stream, length: int) -> int:
        """Store exactly ``length`` bytes from ``stream`` atomically."""
        local = self.local_path(path)
        self.check_space(path, length)
        parent = os.path.dirname(local)
        os.makedirs(parent, exist_ok=True)
        if os.path.isdir(local):
            raise Forbidden(f"{path} is a directory")
        # re-check: makedirs may have followed a planted symlink
        self.local_path(path)
        fd, tmp = tempfile.mkstemp(prefix=TMP_PREFIX, dir=parent)
        try:
            with os.fdopen(fd, "wb") as out:
                moved = _http.copy_range(stream, out, length)
                if moved != length:
                    raise ConnectionError(f"body ended after {moved} of {length} bytes")
                out.flush()
                os.fsync(out.fileno())
            os.replace(tmp, local)
        except BaseException:
            try:
                os.unlink(tmp)
            except FileNotFoundError:
                pass
            raise
        return moved

    def delete_object(self, path: ObjectPath) -> bool:
        local = self.local_path(path)
        try:
            os.unlink(local)
            return True
        except FileNotFoundError:
            return False


class Origin:
    def __init__(self, cfg: OriginConfig, emitter: Optional[RecordEmitter] = None):
        self.cfg = cfg
        self.store = OriginStore(cfg.prefix, cfg.root_dir, cfg.capacity_bytes)
        self.emitter = emitter
        self.active = _http.ActiveTransfers()
        self.base_url: Optional[str] = None

    def record(self, path: ObjectPath, direction: str, nbytes: int, client: str, started: float):
        if self.emitter is None:
            return
        now = time.time()
        self.emitter.emit(TransferRecord(
            service=self.cfg.name, kind="origin", path=str(path), direction=direction,
            bytes=nbytes, cache_hit=None, client=client, timestamp=now,
            duration_ms=max(0.0, (now - started) * 1000.0),
        ))

    def registration(self) -> dict:
        return {"name": self.cfg.name, "kind": "origin", "base_url": self.base_url,
                "lat": self.cfg.lat, "lon": self.cfg.lon, "prefixes": [self.cfg.prefix]}


class OriginHandler(_http.Handler):
    def _headers(self, **extra):
        return {"X-Service-Name": self.app.cfg.name, **extra}

    def _path(self) -> Optional[ObjectPath]:
        route = urlsplit(self.path).path
        if not route.startswith("/data/"):
            self.send_error_json(404, "NotFound", route, self._headers())
            return None
        try:
            return path_from_url(route[len("/data"):])
        except MalformedPath as exc:
            self.send_error_json(400, "MalformedPath", str(exc), self._headers())
            return None

    def _fail(self, exc: Exception) -> None:
        if isinstance(exc, Forbidden):
            self.send_error_json(403, "Forbidden", str(exc), self._headers())
        elif isinstance(exc, NotFound):
            self.send_error_json(404, "NotFound", str(exc), self._headers())
        elif isinstance(exc, _http.BadRange):
            self.send_error_json(416, "BadRange", str(exc), self._headers())
        elif isinstance(exc, StorageFull):
            self.send_error_json(507, "StorageFull", str(exc), self._headers())
        else:
            raise exc

    def do_HEAD(self):
        self.do_GET(head=True)

    def do_GET(self, head: bool = False):
        with self.app.active:
            self._get(head)

    def _get(self, head: bool):
        path = self._path()
        if path is None:
            return
        started = time.time()
        store = self.app.store
        try:
            fh = store.open_object(path)
        except (Forbidden, NotFound) as exc:
            self._fail(exc)
            return
        with fh:
            size = os.fstat(fh.fileno()).st_size
            try:
                rng = _http.parse_range(self.headers.get("Range"), size)
            except _http.BadRange as exc:
                self.send_error_json(416, "BadRange", str(exc),
                                     self._headers(**{"Content-Range": f"bytes */{size}"}))
                return
            start, end = rng if rng else (0, size - 1)
            length = end - start + 1 if size else 0
            headers = self._headers(**{"Content-Length": str(length), "Accept-Ranges": "bytes",
                                       "Content-Type": "application/octet-stream"})
            if rng:
                headers["Content-Range"] = f"bytes {start}-{end}/{size}"
            self.send_response(206 if rng else 200)
            for k, v in headers.items():
                self.send_header(k, v)
            self.end_headers()
            if head:
                return
            fh.seek(start)
            moved = _http.copy_range(fh, self.wfile, length)
            self.wfile.flush()
        if moved == length:
            self.app.record(path, "serve", moved, _http.client_name(self), started)

    def do_PUT(self):
        with self.app.active:
            self._put()

    def _put(self):
        path = self._path()
        if path is None:
            return
        started = time.time()
        if self.headers.get("Content-Length") is None or self.headers.get("Transfer-Encoding"):
            self.close_connection = True
            self.send_error_json(411, "LengthRequired", "PUT needs Content-Length", self._headers())
            return
        length = int(self.headers["Content-Length"])
        try:
            moved = self.app.store.put_object(path, self.rfile, length)
        except (Forbidden, NotFound, StorageFull) as exc:
            # the unread body would corrupt the next request on this connection
            self.close_connection = True
            self._fail(exc)
            return
        except ConnectionError as exc:
            self.close_connection = True
            self.send_error_json(400, "IncompleteBody", str(exc), self._headers())
            return
        self.app.record(path, "ingest", moved, _http.client_name(self), started)
        self.send_json(201, {"ok": True, "path": str(path), "size": moved}, self._headers())

    def do_DELETE(self):
        path = self._path()
        if path is None:
            return
        try:
            existed = self.app.store.delete_object(path)
        except (Forbidden, NotFound) as exc:
            self._fail(exc)
            return
        self.send_empty(204 if existed else 404, self._headers())

    def do_POST(self):
        route = urlsplit(self.path).path
        self.read_body()
        if route == "/admin/flush-accounting":
            ok = _http.flush_accounting(self.app)
            self.send_json(200 if ok else 504, {"ok": ok}, self._headers())
        else:
            self.send_error_json(404, "NotFound", route, self._headers())


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(prog="fed-origin", description=__doc__)
    parser.add_argument("--config", required=True, help="origin JSON config")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    _http.configure_logging(args.verbose)

    cfg = OriginConfig.load(args.config)
    emitter = RecordEmitter(cfg.director_url).start()
    origin = Origin(cfg, emitter)
    server = _http.ServiceServer(cfg.listen_addr, OriginHandler, origin)
    origin.base_url = server.url
    try:
        _http.register(cfg.director_url, origin.registration())
    except RuntimeError as exc:
        print(f"REGISTRATION FAILED {exc}", file=sys.stderr, flush=True)
        server.server_close()
        sys.exit(3)
    _http.serve(
        server,
        on_stop=emitter.stop,
        background=[_http.heartbeat_loop(cfg.director_url, origin.registration, cfg.heartbeat_s)],
    )


if __name__ == "__main__":
    main()
