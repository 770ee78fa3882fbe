"""Pull-through disk cache service with single-flight misses and LRU eviction."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
import threading
import time
from dataclasses import dataclass
from typing import Optional
from urllib.parse import quote, urlsplit

import requests

from . import _http
from .accounting import RecordEmitter, TransferRecord
from .lru import LRUIndex
from .namespace import MalformedPath, ObjectPath, path_from_url

log = logging.getLogger(__name__)


class UpstreamNotFound(LookupError):
    pass


class OriginUnreachable(ConnectionError):
    pass


@dataclass
class CacheConfig:
    name: str
    director_url: str
    store_dir: str
    capacity: int
    listen_addr: str = "127.0.0.1:0"
    lat: float = 0.0
    lon: float = 0.0
    high_watermark: float = 0.90
    low_watermark: float = 0.80
    heartbeat_s: float = 100.0
    fetch_timeout: tuple = (10.0, 60.0)

    def __post_init__(self):
        if not 0 < self.low_watermark < self.high_watermark <= 1:
            raise ValueError("need 0 < low_watermark < high_watermark <= 1")
        self.fetch_timeout = tuple(self.fetch_timeout)

    @classmethod
    def load(cls, path) -> "CacheConfig":
        with open(path, encoding="utf-8") as fh:
            return cls(**json.load(fh))


class _Flight:
    def __init__(self):
        self.done = threading.Event()
        self.error: Optional[Exception] = None
        self.stored = False


class Lease:
    """An open handle on cached (or proxied) bytes; release() when served."""

    def __init__(self, fh, size: int, hit: bool, release):
        self.fh = fh
        self.size = size
        self.hit = hit
        self._release = release

    def release(self) -> None:
        try:
            self.fh.close()
        finally:
            self._release()


class PullThroughCache:
    def __init__(self, cfg: CacheConfig, emitter: Optional[RecordEmitter] = None):
        self.cfg = cfg
        self.emitter = emitter
        self.index = LRUIndex(cfg.capacity, cfg.high_watermark, cfg.low_watermark)
        self.objects_dir = os.path.join(cfg.store_dir, "objects")
        self.tmp_dir = os.path.join(cfg.store_dir, "tmp")
        os.makedirs(self.objects_dir, exist_ok=True)
        os.makedirs(self.tmp_dir, exist_ok=True)
        self._lock = threading.Lock()
        self._flights: dict[ObjectPath, _Flight] = {}
        self._session = requests.Session()
        self.base_url: Optional[str] = None
        self.active = _http.ActiveTransfers()
        self.origin_fetches = 0
        self._reload()

    def _reload(self) -> None:
        for name in os.listdir(self.tmp_dir):
            os.unlink(os.path.join(self.tmp_dir, name))
        found = []
        for dirpath, _, files in os.walk(self.objects_dir):
            for f in files:
                full = os.path.join(dirpath, f)
                rel = os.path.relpath(full, self.objects_dir).split(os.sep)
                try:
                    path = ObjectPath(tuple(rel))
                except MalformedPath:
                    continue
                st = os.stat(full)
                found.append((st.st_mtime, str(path), path, st.st_size))
        for _, _, path, size in sorted(found):
            for victim in self.index.insert(path, size):
                self._unlink(victim)

    def _file(self, path: ObjectPath) -> str:
        return os.path.join(self.objects_dir, *path.segments)

    def _unlink(self, path: ObjectPath) -> None:
        try:
            os.unlink(self._file(path))
        except FileNotFoundError:
            pass

    # lookups

    def _open_hit(self, path: ObjectPath, hit: bool) -> Optional[Lease]:
        """Under self._lock: pin and open a complete entry, or None."""
        entry = self.index.touch(path)
        if entry is None:
            return None
        fh = open(self._file(path), "rb")
        self.index.pin(path)
        return Lease(fh, entry.size, hit, lambda: self._unpin(path))

    def _unpin(self, path: ObjectPath) -> None:
        with self._lock:
            for victim in self.index.unpin(path):
                self._unlink(victim)

    def acquire(self, path: ObjectPath) -> Lease:
        """Return a lease on the object's full bytes, fetching on a miss.

        Concurrent misses for one path share a single origin fetch.
        """
        follower = False
        while True:
            with self._lock:
                lease = self._open_hit(path, hit=not follower)
                if lease is not None:
                    return lease
                flight = self._flights.get(path)
                leader = flight is None
                if leader:
                    flight = self._flights[path] = _Flight()
            if not leader:
                flight.done.wait()
                if flight.error is not None:
                    raise flight.error
                follower = True
                if flight.stored:
                    continue
                # proxied objects are not shared; fetch our own copy
                with self._lock:
                    if self._flights.get(path) is None:
                        self._flights[path] = flight = _Flight()
                        leader = True
                    else:
                        continue
            try:
                return self._fetch_as_leader(path, flight)
            finally:
                with self._lock:
                    self._flights.pop(path, None)
                flight.done.set()

    def _fetch_as_leader(self, path: ObjectPath, flight: _Flight) -> Lease:
        try:
            tmp, size = self._download(path)
        except Exception as exc:
            flight.error = exc
            raise
        with self._lock:
            if self.index.admits(size):
                os.makedirs(os.path.dirname(self._file(path)), exist_ok=True)
                os.replace(tmp, self._file(path))
                for victim in self.index.insert(path, size, pinned=True):
                    self._unlink(victim)
                flight.stored = True
                try:
                    fh = open(self._file(path), "rb")
                except BaseException:
                    self.index.unpin(path)
                    raise
                return Lease(fh, size, False, lambda: self._unpin(path))
        # too large to keep: serve from the temp copy, then drop it
        fh = open(tmp, "rb")
        os.unlink(tmp)
        return Lease(fh, size, False, lambda: None)

    def _download(self, path: ObjectPath) -> tuple[str, int]:
        started = time.time()
        director = self.cfg.director_url.rstrip("/")
        try:
            resp = self._session.get(f"{director}/api/v1/resolve", params={"path": str(path)},
                                     timeout=self.cfg.fetch_timeout)
        except requests.RequestException as exc:
            raise OriginUnreachable(f"director unreachable: {exc}") from exc
        if resp.status_code == 404:
            raise UpstreamNotFound(f"unknown namespace for {path}")
        if resp.status_code != 200:
            raise OriginUnreachable(f"director answered {resp.status_code}")
        origin_url = resp.json()["origin_url"]

        fd, tmp = tempfile.mkstemp(dir=self.tmp_dir)
        try:
            with os.fdopen(fd, "wb") as out:
                self.origin_fetches += 1
                with self._session.get(origin_url, stream=True, timeout=self.cfg.fetch_timeout,
                                       headers={"X-Client-Name": self.cfg.name}) as up:
                    if up.status_code == 404:
                        raise UpstreamNotFound(f"{path} not found at origin")
                    if up.status_code != 200:
                        raise OriginUnreachable(f"origin answered {up.status_code}")
                    expected = int(up.headers["Content-Length"])
                    size = 0
                    for chunk in up.iter_content(1 << 16):
                        out.write(chunk)
                        size += len(chunk)
                if size != expected:
                    raise OriginUnreachable(f"short read from origin: {size}/{expected}")
        except requests.RequestException as exc:
            os.unlink(tmp)
            raise OriginUnreachable(str(exc)) from exc
        except BaseException:
            os.unlink(tmp)
            raise
        self.record(path, "ingest", size, None, "origin", started)
        return tmp, size

    # admin

    def purge(self, path: ObjectPath) -> bool:
        with self._lock:
            removed = self.index.remove(path)
            if removed:
                # open leases keep their descriptor; the bytes vanish once they close
                self._unlink(path)
        return removed

    def usage(self) -> dict:
        with self._lock:
            return self.index.usage()

    def record(self, path, direction, nbytes, hit, client, started) -> None:
        if self.emitter is None:
            return
        now = time.time()
        self.emitter.emit(TransferRecord(
            service=self.cfg.name, kind="cache", path=str(path), direction=direction,
            bytes=nbytes, cache_hit=hit, client=client, timestamp=now,
            duration_ms=max(0.0, (now - started) * 1000.0),
        ))

    def registration(self) -> dict:
        return {"name": self.cfg.name, "kind": "cache", "base_url": self.base_url,
                "lat": self.cfg.lat, "lon": self.cfg.lon, "prefixes": []}


class CacheHandler(_http.Handler):
    def _headers(self, **extra):
        return {"X-Service-Name": self.app.cfg.name, **extra}

    def _object(self, route: str, mount: str) -> Optional[ObjectPath]:
        try:
            return path_from_url(route[len(mount):])
        except MalformedPath as exc:
            self.send_error_json(400, "MalformedPath", str(exc), self._headers())
            return None

    def do_GET(self):
        route = urlsplit(self.path).path
        if route == "/admin/usage":
            self.send_json(200, self.app.usage(), self._headers())
            return
        if not route.startswith("/data/"):
            self.send_error_json(404, "NotFound", route, self._headers())
            return
        with self.app.active:
            self._get(route)

    def _get(self, route: str):
        path = self._object(route, "/data")
        if path is None:
            return
        started = time.time()
        try:
            lease = self.app.acquire(path)
        except UpstreamNotFound as exc:
            self.send_error_json(404, "NotFound", str(exc), self._headers())
            return
        except OriginUnreachable as exc:
            self.send_error_json(502, "OriginUnreachable", str(exc), self._headers())
            return
        try:
            self._serve(path, lease, started)
        finally:
            lease.release()

    def _serve(self, path: ObjectPath, lease: Lease, started: float) -> None:
        status = "HIT" if lease.hit else "MISS"
        try:
            rng = _http.parse_range(self.headers.get("Range"), lease.size)
        except _http.BadRange as exc:
            self.send_error_json(416, "BadRange", str(exc), self._headers(
                **{"X-Cache": status, "Content-Range": f"bytes */{lease.size}"}))
            return
        start, end = rng if rng else (0, lease.size - 1)
        length = end - start + 1 if lease.size else 0
        self.send_response(206 if rng else 200)
        headers = self._headers(**{"X-Cache": status, "Content-Length": str(length),
                                   "Accept-Ranges": "bytes",
                                   "Content-Type": "application/octet-stream"})
        if rng:
            headers["Content-Range"] = f"bytes {start}-{end}/{lease.size}"
        for k, v in headers.items():
            self.send_header(k, v)
        self.end_headers()
        lease.fh.seek(start)
        moved = _http.copy_range(lease.fh, self.wfile, length)
        self.wfile.flush()
        if moved == length:
            self.app.record(path, "serve", moved, lease.hit, _http.client_name(self), started)

    def do_DELETE(self):
        route = urlsplit(self.path).path
        if not route.startswith("/admin/purge/"):
            self.send_error_json(404, "NotFound", route, self._headers())
            return
        path = self._object(route, "/admin/purge")
        if path is None:
            return
        purged = self.app.purge(path)
        self.send_json(200, {"ok": True, "purged": purged}, self._headers())

    def do_POST(self):
        route = urlsplit(self.path).path
        self.read_body()
        if route == "/admin/flush-accounting":
            ok = _http.flush_accounting(self.app)
            self.send_json(200 if ok else 504, {"ok": ok}, self._headers())
        else:
            self.send_error_json(404, "NotFound", route, self._headers())


def purge_url(base_url: str, path: ObjectPath) -> str:
    return base_url.rstrip("/") + "/admin/purge" + quote(str(path))


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(prog="fed-cache", description=__doc__)
    parser.add_argument("--config", required=True, help="cache JSON config")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    _http.configure_logging(args.verbose)

    cfg = CacheConfig.load(args.config)
    emitter = RecordEmitter(cfg.director_url).start()
    cache = PullThroughCache(cfg, emitter)
    server = _http.ServiceServer(cfg.listen_addr, CacheHandler, cache)
    cache.base_url = server.url
    try:
        _http.register(cfg.director_url, cache.registration())
    except RuntimeError as exc:
        print(f"REGISTRATION FAILED {exc}", file=sys.stderr, flush=True)
        server.server_close()
        sys.exit(3)
    _http.serve(
        server,
        on_stop=emitter.stop,
        background=[_http.heartbeat_loop(cfg.director_url, cache.registration, cfg.heartbeat_s)],
    )


if __name__ == "__main__":
    main()
