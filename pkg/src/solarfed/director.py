"""The federation director: service registry, path resolution, redirects and
the accounting sink."""

from __future__ import annotations

import argparse
import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional
from urllib.parse import parse_qs, quote, urlsplit

from . import _http
from .accounting import AccountingLog, InvalidRecord, TransferRecord
from .geo import GeoPoint, GeoTable, load_geo_table_file, lookup_client, rank_caches
from .namespace import MalformedPath, ObjectPath, UnknownNamespace, match_prefix, normalize_path

log = logging.getLogger(__name__)

DEFAULT_STALENESS_S = 300.0
URL_SAFE = "/:@!$&'()*+,;="


class DuplicatePrefix(ValueError):
    pass


def object_url(base_url: str, path: ObjectPath) -> str:
    return base_url.rstrip("/") + "/data" + quote(str(path), safe=URL_SAFE)


@dataclass(frozen=True)
class ServiceRecord:
    name: str
    kind: str
    base_url: str
    location: GeoPoint
    prefixes: tuple[ObjectPath, ...] = ()
    registered_at: float = 0.0
    last_heartbeat: float = 0.0

    def validate(self) -> "ServiceRecord":
        if not isinstance(self.name, str) or not self.name.strip():
            raise InvalidRecord("name must be non-empty text")
        if self.kind not in ("origin", "cache"):
            raise InvalidRecord(f"kind must be origin or cache, got {self.kind!r}")
        parts = urlsplit(self.base_url) if isinstance(self.base_url, str) else None
        if parts is None or parts.scheme not in ("http", "https") or not parts.netloc:
            raise InvalidRecord(f"base_url must be an absolute http(s) URL, got {self.base_url!r}")
        if self.kind == "origin" and not self.prefixes:
            raise InvalidRecord("origins must export at least one prefix")
        if self.kind == "cache" and self.prefixes:
            raise InvalidRecord("caches do not export prefixes")
        if len(set(self.prefixes)) != len(self.prefixes):
            raise InvalidRecord("duplicate prefix within one record")
        return self

    @classmethod
    def from_payload(cls, data: dict, now: float) -> "ServiceRecord":
        if not isinstance(data, dict):
            raise InvalidRecord("body must be a JSON object")
        try:
            location = GeoPoint(data["lat"], data["lon"])
            prefixes = tuple(normalize_path(p) for p in data.get("prefixes") or ())
            return cls(
                name=data["name"],
                kind=data["kind"],
                base_url=data["base_url"],
                location=location,
                prefixes=prefixes,
                registered_at=now,
                last_heartbeat=now,
            ).validate()
        except KeyError as exc:
            raise InvalidRecord(f"missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError, MalformedPath) as exc:
            if isinstance(exc, InvalidRecord):
                raise
            raise InvalidRecord(str(exc)) from exc

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "base_url": self.base_url,
            "lat": self.location.lat,
            "lon": self.location.lon,
            "prefixes": [str(p) for p in self.prefixes],
            "registered_at": self.registered_at,
            "last_heartbeat": self.last_heartbeat,
        }


@dataclass(frozen=True)
class ResolutionResult:
    object: ObjectPath
    origin_url: str
    cache_urls: tuple[str, ...]

    def to_dict(self) -> dict:
        return {"object": str(self.object), "origin_url": self.origin_url,
                "cache_urls": list(self.cache_urls)}

    @classmethod
    def from_dict(cls, data: dict) -> "ResolutionResult":
        return cls(normalize_path(data["object"]), data["origin_url"], tuple(data["cache_urls"]))


class Registry:
    """Name -> ServiceRecord map. Mutations are serialized and publish a new
    immutable snapshot, so readers never see a half-applied registration."""

    def __init__(self):
        self._lock = threading.Lock()
        self._snapshot: dict[str, ServiceRecord] = {}

    def register(self, record: ServiceRecord) -> ServiceRecord:
        record.validate()
        with self._lock:
            current = self._snapshot
            if record.kind == "origin":
                for other in current.values():
                    if other.name == record.name or other.kind != "origin":
                        continue
                    clash = set(other.prefixes) & set(record.prefixes)
                    if clash:
                        raise DuplicatePrefix(
                            f"prefix {min(clash)} already exported by {other.name!r}")
            previous = current.get(record.name)
            if previous is not None:
                record = replace(record, registered_at=previous.registered_at)
            updated = dict(current)
            updated[record.name] = record
            self._snapshot = updated
        return record

    def snapshot(self) -> dict[str, ServiceRecord]:
        return self._snapshot

    def __len__(self) -> int:
        return len(self._snapshot)


class Director:
    def __init__(self, geo_table: Optional[GeoTable] = None,
                 staleness_s: float = DEFAULT_STALENESS_S,
                 accounting: Optional[AccountingLog] = None,
                 clock: Callable[[], float] = time.time):
        self.registry = Registry()
        self.geo_table = geo_table or GeoTable()
        self.staleness_s = float(staleness_s)
        self.accounting = accounting if accounting is not None else AccountingLog()
        self.clock = clock

    # registration and listing

    def register_service(self, record) -> ServiceRecord:
        now = self.clock()
        if isinstance(record, dict):
            record = ServiceRecord.from_payload(record, now)
        else:
            record = replace(record, registered_at=now, last_heartbeat=now)
        return self.registry.register(record)

    def is_stale(self, record: ServiceRecord, now: Optional[float] = None) -> bool:
        now = self.clock() if now is None else now
        return now - record.last_heartbeat > self.staleness_s

    def list_services(self) -> list[dict]:
        now = self.clock()
        out = []
        snapshot = self.registry.snapshot()
        for name in sorted(snapshot):
            rec = snapshot[name]
            out.append({**rec.to_dict(), "stale": self.is_stale(rec, now)})
        return out

    # routing

    def locate_client(self, ip: Optional[str], override: Optional[GeoPoint] = None) -> Optional[GeoPoint]:
        return lookup_client(self.geo_table, ip or "", override)

    def resolve(self, path, client: Optional[GeoPoint]) -> ResolutionResult:
        path = normalize_path(path)
        now = self.clock()
        live = [r for r in self.registry.snapshot().values() if not self.is_stale(r, now)]
        owners = {}
        for rec in live:
            if rec.kind == "origin":
                for prefix in rec.prefixes:
                    owners[prefix] = rec
        prefix = match_prefix(path, owners)
        if prefix is None:
            raise UnknownNamespace(str(path))
        origin = owners[prefix]
        caches = rank_caches(client, [r for r in live if r.kind == "cache"])
        return ResolutionResult(
            object=path,
            origin_url=object_url(origin.base_url, path),
            cache_urls=tuple(object_url(c.base_url, path) for c in caches),
        )

    def redirect(self, path, client: Optional[GeoPoint]) -> tuple[int, dict]:
        """Return (status, headers) for a redirect request."""
        try:
            res = self.resolve(path, client)
        except UnknownNamespace:
            return 404, {}
        if res.cache_urls:
            location = res.cache_urls[0]
            alternates = list(res.cache_urls[1:]) + [res.origin_url]
        else:
            location = res.origin_url
            alternates = []
        return 307, {"Location": location, "X-Alt-Sources": ",".join(alternates)}

    # accounting

    def append_record(self, data) -> TransferRecord:
        record = data if isinstance(data, TransferRecord) else TransferRecord.from_dict(data)
        self.accounting.append_record(record)
        return record

    def stats(self, service: Optional[str] = None, since: Optional[float] = None) -> dict:
        return self.accounting.aggregate_stats(service, since)


def _query(handler) -> tuple[str, dict[str, str]]:
    parts = urlsplit(handler.path)
    return parts.path, {k: v[-1] for k, v in parse_qs(parts.query).items()}


class DirectorHandler(_http.Handler):
    def _client_geo(self) -> Optional[GeoPoint]:
        override = self.headers.get("X-Client-Geo")
        if override:
            return GeoPoint.parse(override)
        return self.app.locate_client(self.client_address[0])

    def _object_path(self, params):
        raw = params.get("path")
        if not raw:
            raise MalformedPath("missing path parameter")
        return normalize_path(raw)

    def do_GET(self):
        route, params = _query(self)
        try:
            if route == "/api/v1/resolve":
                res = self.app.resolve(self._object_path(params), self._client_geo())
                self.send_json(200, res.to_dict())
            elif route == "/api/v1/redirect":
                status, headers = self.app.redirect(self._object_path(params), self._client_geo())
                if status == 404:
                    self.send_error_json(404, "UnknownNamespace", params.get("path", ""))
                else:
                    self.send_empty(status, headers)
            elif route == "/api/v1/services":
                self.send_json(200, self.app.list_services())
            elif route == "/api/v1/stats":
                since = float(params["since"]) if "since" in params else None
                self.send_json(200, self.app.stats(params.get("service"), since))
            elif route == "/api/v1/accounting":
                since = float(params["since"]) if "since" in params else None
                records = self.app.accounting.records(params.get("service"), since)
                self.send_json(200, [r.to_dict() for r in records])
            elif route == "/healthz":
                self.send_json(200, {"ok": True})
            else:
                self.send_error_json(404, "NotFound", route)
        except UnknownNamespace as exc:
            self.send_error_json(404, "UnknownNamespace", str(exc))
        except (MalformedPath, ValueError) as exc:
            self.send_error_json(400, "BadRequest", str(exc))

    def do_POST(self):
        route, _ = _query(self)
        try:
            body = self.read_json()
        except ValueError as exc:
            self.send_error_json(400, "BadRequest", f"invalid JSON: {exc}")
            return
        try:
            if route == "/api/v1/register":
                self.app.register_service(body)
                self.send_json(200, {"ok": True})
            elif route == "/api/v1/accounting":
                self.app.append_record(body)
                self.send_empty(204)
            else:
                self.send_error_json(404, "NotFound", route)
        except DuplicatePrefix as exc:
            self.send_error_json(409, "DuplicatePrefix", str(exc))
        except InvalidRecord as exc:
            self.send_error_json(400, "InvalidRecord", str(exc))
        except (TypeError, ValueError) as exc:
            self.send_error_json(400, "InvalidRecord", str(exc))


@dataclass
class DirectorConfig:
    listen_addr: str = "127.0.0.1:8700"
    geo_table_path: Optional[str] = None
    staleness_s: float = DEFAULT_STALENESS_S
    data_dir: str = "director-data"

    @classmethod
    def load(cls, path) -> "DirectorConfig":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        return cls(**data)


def build_director(cfg: DirectorConfig) -> Director:
    geo = load_geo_table_file(cfg.geo_table_path) if cfg.geo_table_path else GeoTable()
    os.makedirs(cfg.data_dir, exist_ok=True)
    accounting = AccountingLog(os.path.join(cfg.data_dir, "accounting.ndjson"))
    return Director(geo, cfg.staleness_s, accounting)


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(prog="fed-director", description=__doc__)
    parser.add_argument("--config", required=True, help="director JSON config")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    _http.configure_logging(args.verbose)

    cfg = DirectorConfig.load(args.config)
    director = build_director(cfg)
    server = _http.ServiceServer(cfg.listen_addr, DirectorHandler, director)
    log.info("director listening on %s", server.url)
    _http.serve(server, on_stop=director.accounting.close)


if __name__ == "__main__":
    main()
