"""Transfer records, the NDJSON append log, and aggregate queries."""

from __future__ import annotations

import json
import logging
import os
import queue
import threading
import time
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional

from .namespace import MalformedPath, normalize_path

log = logging.getLogger(__name__)

RECORD_FIELDS = (
    "service", "kind", "path", "direction", "bytes", "cache_hit",
    "client", "timestamp", "duration_ms",
)


class InvalidRecord(ValueError):
    pass


@dataclass(frozen=True)
class TransferRecord:
    service: str
    kind: str  # origin | cache
    path: str
    direction: str  # serve | ingest
    bytes: int
    cache_hit: Optional[bool]
    client: str
    timestamp: float
    duration_ms: float

    def validate(self) -> "TransferRecord":
        if not isinstance(self.service, str) or not self.service:
            raise InvalidRecord("service must be a non-empty name")
        if self.kind not in ("origin", "cache"):
            raise InvalidRecord(f"bad kind {self.kind!r}")
        if self.direction not in ("serve", "ingest"):
            raise InvalidRecord(f"bad direction {self.direction!r}")
        try:
            if str(normalize_path(self.path)) != self.path:
                raise InvalidRecord(f"path not canonical: {self.path!r}")
        except MalformedPath as exc:
            raise InvalidRecord(str(exc)) from exc
        if isinstance(self.bytes, bool) or not isinstance(self.bytes, int) or self.bytes < 0:
            raise InvalidRecord("bytes must be a non-negative integer")
        wants_hit = self.kind == "cache" and self.direction == "serve"
        if wants_hit and not isinstance(self.cache_hit, bool):
            raise InvalidRecord("cache serve records need cache_hit")
        if not wants_hit and self.cache_hit is not None:
            raise InvalidRecord("cache_hit only applies to cache serve records")
        if not isinstance(self.client, str):
            raise InvalidRecord("client must be text")
        for name in ("timestamp", "duration_ms"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or v < 0:
                raise InvalidRecord(f"{name} must be a non-negative number")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TransferRecord":
        if not isinstance(data, dict):
            raise InvalidRecord("record must be a JSON object")
        if set(data) != set(RECORD_FIELDS):
            missing = set(RECORD_FIELDS) - set(data)
            extra = set(data) - set(RECORD_FIELDS)
            raise InvalidRecord(f"field mismatch: missing={sorted(missing)} extra={sorted(extra)}")
        return cls(**data).validate()


def fold_stats(records: Iterable[TransferRecord], service: Optional[str] = None,
               since: Optional[float] = None) -> dict:
    out = {"records": 0, "total_bytes": 0, "hits": 0, "misses": 0, "bytes_by_service": {}}
    by_service: dict[str, int] = defaultdict(int)
    for r in records:
        if service is not None and r.service != service:
            continue
        if since is not None and r.timestamp < since:
            continue
        out["records"] += 1
        out["total_bytes"] += r.bytes
        by_service[r.service] += r.bytes
        if r.kind == "cache" and r.direction == "serve":
            if r.cache_hit:
                out["hits"] += 1
            else:
                out["misses"] += 1
    out["bytes_by_service"] = dict(sorted(by_service.items()))
    return out


class AccountingLog:
    """Append-only NDJSON log with an in-memory mirror for queries.

    If ``path`` is None the log is memory-only.
    """

    def __init__(self, path=None):
        self.path = path
        self._lock = threading.Lock()
        self._records: list[TransferRecord] = []
        self._fh = None
        if path is not None:
            if os.path.exists(path):
                self._records.extend(read_log(path))
            self._fh = open(path, "a", encoding="utf-8")

    def append_record(self, record: TransferRecord) -> None:
        record.validate()
        line = json.dumps(record.to_dict(), sort_keys=True) + "\n"
        with self._lock:
            if self._fh is not None:
                self._fh.write(line)
                self._fh.flush()
            self._records.append(record)

    def records(self, service: Optional[str] = None, since: Optional[float] = None) -> list[TransferRecord]:
        with self._lock:
            snapshot = list(self._records)
        return [r for r in snapshot
                if (service is None or r.service == service)
                and (since is None or r.timestamp >= since)]

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)

    def aggregate_stats(self, service: Optional[str] = None, since: Optional[float] = None) -> dict:
        with self._lock:
            snapshot = list(self._records)
        return fold_stats(snapshot, service, since)

    def close(self) -> None:
        with self._lock:
            if self._fh is not None:
                self._fh.flush()
                os.fsync(self._fh.fileno())
                self._fh.close()
                self._fh = None


def read_log(path) -> list[TransferRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                records.append(TransferRecord.from_dict(json.loads(line)))
            except (json.JSONDecodeError, InvalidRecord) as exc:
                # A torn final line after a crash is tolerated; anything else is not.
                if not line.endswith("\n"):
                    log.warning("ignoring torn last line %d in %s", n, path)
                    break
                raise InvalidRecord(f"{path}:{n}: {exc}") from exc
    return records


@dataclass
class RecordEmitter:
    """Best-effort background delivery of records to the director.

    Each record gets up to ``attempts`` POSTs; failures are logged and dropped
    so transfers are never blocked on accounting.
    """

    director_url: str
    attempts: int = 3
    timeout: float = 5.0
    _queue: "queue.Queue" = field(default_factory=queue.Queue, init=False)
    _thread: Optional[threading.Thread] = field(default=None, init=False)
    dropped: int = field(default=0, init=False)

    def start(self) -> "RecordEmitter":
        import requests

        self._session = requests.Session()
        self._thread = threading.Thread(target=self._run, name="accounting-emitter", daemon=True)
        self._thread.start()
        return self

    def emit(self, record: TransferRecord) -> None:
        self._queue.put(record)

    def flush(self, timeout: Optional[float] = None) -> bool:
        """Block until everything queued so far has been delivered or dropped."""
        done = threading.Event()
        self._queue.put(done)
        return done.wait(timeout)

    def _run(self) -> None:
        url = self.director_url.rstrip("/") + "/api/v1/accounting"
        while True:
            item = self._queue.get()
            if item is None:
                return
            if isinstance(item, threading.Event):
                item.set()
                continue
            delivered = False
            for attempt in range(1, self.attempts + 1):
                try:
                    resp = self._session.post(url, json=item.to_dict(), timeout=self.timeout)
                    if resp.status_code == 204:
                        delivered = True
                        break
                    log.warning("accounting rejected (%s): %s", resp.status_code, resp.text[:200])
                    if 400 <= resp.status_code < 500:
                        break
                except Exception as exc:  # network errors of any flavour
                    log.warning("accounting attempt %d failed: %s", attempt, exc)
                if attempt < self.attempts:
                    time.sleep(0.1 * attempt)
            if not delivered:
                self.dropped += 1

    def stop(self, timeout: float = 10.0) -> None:
        if self._thread is None:
            return
        self.flush(timeout)
        self._queue.put(None)
        self._thread.join(timeout)
