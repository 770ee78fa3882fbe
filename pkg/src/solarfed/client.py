"""Federation client: locate objects, download through the nearest cache with
fallback, and write products back to their origin."""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field
from typing import Optional

import requests

from .director import ResolutionResult
from .geo import GeoPoint
from .namespace import ObjectPath, UnknownNamespace, normalize_path

DEFAULT_TIMEOUT = (10.0, 60.0)


class DirectorUnreachable(ConnectionError):
    pass


class OriginUnreachable(ConnectionError):
    pass


class StorageFull(OSError):
    pass


class AllSourcesFailed(ConnectionError):
    def __init__(self, causes: list[tuple[str, str]]):
        self.causes = causes
        detail = "; ".join(f"{url}: {why}" for url, why in causes)
        super().__init__(f"all sources failed: {detail}")


@dataclass
class FetchPlan:
    sources: list[str]
    attempts_per_source: int = 1

    def __post_init__(self):
        if not self.sources:
            raise ValueError("a fetch plan needs at least one source")


@dataclass
class FetchResult:
    bytes: int
    source_used: str
    cache_hit: Optional[bool]
    attempts: list = field(default_factory=list)


class FedClient:
    def __init__(self, director_url: str, client_geo: Optional[GeoPoint] = None,
                 client_name: Optional[str] = None, timeout=DEFAULT_TIMEOUT,
                 attempts_per_source: int = 1):
        self.director_url = director_url.rstrip("/")
        self.client_geo = client_geo
        self.client_name = client_name
        self.timeout = timeout
        self.attempts_per_source = attempts_per_source
        self.session = requests.Session()

    def _headers(self) -> dict:
        headers = {}
        if self.client_geo is not None:
            headers["X-Client-Geo"] = str(self.client_geo)
        if self.client_name:
            headers["X-Client-Name"] = self.client_name
        return headers

    def _director_get(self, route: str, **params) -> requests.Response:
        try:
            return self.session.get(self.director_url + route, params=params,
                                    headers=self._headers(), timeout=self.timeout,
                                    allow_redirects=False)
        except requests.RequestException as exc:
            raise DirectorUnreachable(f"{self.director_url}: {exc}") from exc

    def locate(self, path) -> ResolutionResult:
        path = normalize_path(path)
        resp = self._director_get("/api/v1/resolve", path=str(path))
        if resp.status_code == 404:
            raise UnknownNamespace(str(path))
        if resp.status_code != 200:
            raise DirectorUnreachable(f"director answered {resp.status_code}: {resp.text[:200]}")
        return ResolutionResult.from_dict(resp.json())

    def plan(self, path, bypass_cache: bool = False) -> FetchPlan:
        res = self.locate(path)
        sources = [] if bypass_cache else list(res.cache_urls)
        return FetchPlan(sources + [res.origin_url], self.attempts_per_source)

    def redirect_plan(self, path) -> FetchPlan:
        """Build a plan from the director's 307 answer instead of a resolve."""
        path = normalize_path(path)
        resp = self._director_get("/api/v1/redirect", path=str(path))
        if resp.status_code == 404:
            raise UnknownNamespace(str(path))
        if resp.status_code != 307:
            raise DirectorUnreachable(f"director answered {resp.status_code}")
        alternates = [u for u in resp.headers.get("X-Alt-Sources", "").split(",") if u]
        return FetchPlan([resp.headers["Location"]] + alternates, self.attempts_per_source)

    def fetch(self, path, dest, bypass_cache: bool = False,
              follow_redirect: bool = False) -> FetchResult:
        if follow_redirect and not bypass_cache:
            plan = self.redirect_plan(path)
        else:
            plan = self.plan(path, bypass_cache)
        return self.fetch_plan(plan, dest)

    def fetch_plan(self, plan: FetchPlan, dest) -> FetchResult:
        """Try each source in order; the first complete download lands at ``dest``."""
        causes: list[tuple[str, str]] = []
        not_found = 0
        for url in plan.sources:
            for _ in range(plan.attempts_per_source):
                try:
                    nbytes, hit = self._download(url, dest)
                except _NotFound as exc:
                    causes.append((url, str(exc)))
                    not_found += 1
                    break
                except (requests.RequestException, OSError, _BadStatus) as exc:
                    causes.append((url, str(exc)))
                    continue
                return FetchResult(nbytes, url, hit, causes)
        if not_found == len(plan.sources):
            raise FileNotFoundError(f"object not found at any source: {plan.sources}")
        raise AllSourcesFailed(causes)

    def _download(self, url: str, dest) -> tuple[int, Optional[bool]]:
        dest = os.fspath(dest)
        directory = os.path.dirname(os.path.abspath(dest))
        fd, tmp = tempfile.mkstemp(prefix=".part-", dir=directory)
        try:
            with os.fdopen(fd, "wb") as out, self.session.get(
                    url, stream=True, timeout=self.timeout, headers=self._headers()) as resp:
                if resp.status_code == 404:
                    raise _NotFound(f"404 from {url}")
                if resp.status_code != 200:
                    raise _BadStatus(f"HTTP {resp.status_code}")
                expected = resp.headers.get("Content-Length")
                nbytes = 0
                for chunk in resp.iter_content(1 << 16):
                    out.write(chunk)
                    nbytes += len(chunk)
                if expected is not None and nbytes != int(expected):
                    raise _BadStatus(f"short body {nbytes}/{expected}")
                cache_state = resp.headers.get("X-Cache")
            os.replace(tmp, dest)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        hit = None if cache_state is None else cache_state.upper() == "HIT"
        return nbytes, hit

    def store(self, src, path) -> dict:
        """PUT a local file straight to the owning origin (caches are bypassed)."""
        res = self.locate(path)
        size = os.path.getsize(src)
        headers = {**self._headers(), "Content-Length": str(size)}
        try:
            with open(src, "rb") as body:
                resp = self.session.put(res.origin_url, data=body, headers=headers,
                                        timeout=self.timeout)
        except requests.RequestException as exc:
            raise OriginUnreachable(f"{res.origin_url}: {exc}") from exc
        if resp.status_code == 507:
            raise StorageFull(resp.text)
        if resp.status_code != 201:
            raise OriginUnreachable(f"origin answered {resp.status_code}: {resp.text[:200]}")
        return {"path": str(res.object), "origin_url": res.origin_url, "bytes": size}

    def remove(self, path) -> bool:
        """Delete an object at its origin (used to roll back partial writebacks)."""
        res = self.locate(path)
        try:
            resp = self.session.delete(res.origin_url, headers=self._headers(), timeout=self.timeout)
        except requests.RequestException as exc:
            raise OriginUnreachable(str(exc)) from exc
        return resp.status_code == 204

    def stats(self, service: Optional[str] = None, since: Optional[float] = None) -> dict:
        params = {}
        if service:
            params["service"] = service
        if since is not None:
            params["since"] = since
        resp = self._director_get("/api/v1/stats", **params)
        resp.raise_for_status()
        return resp.json()

    def records(self, service: Optional[str] = None, since: Optional[float] = None) -> list[dict]:
        params = {"service": service} if service else {}
        if since is not None:
            params["since"] = since
        resp = self._director_get("/api/v1/accounting", **params)
        resp.raise_for_status()
        return resp.json()

    def services(self) -> list[dict]:
        resp = self._director_get("/api/v1/services")
        resp.raise_for_status()
        return resp.json()


class _NotFound(Exception):
    pass


class _BadStatus(Exception):
    pass
