"""Desk-scale federation launcher and end-to-end scenarios.

Every service runs as its own local process on loopback so scenarios go
over the real HTTP interfaces.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import random
import select
import signal
import subprocess
import sys
import tempfile
import threading
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import requests

from ._http import READY_PREFIX
from .client import FedClient, FetchPlan, FetchResult
from .geo import GeoPoint
from .namespace import ObjectPath, normalize_path

log = logging.getLogger(__name__)


class PortInUse(OSError):
    pass


class RegistrationFailed(RuntimeError):
    def __init__(self, service: str, detail: str = ""):
        super().__init__(f"{service}: {detail}" if detail else service)
        self.service = service


class InvalidTopology(ValueError):
    pass


class ScenarioFailed(AssertionError):
    def __init__(self, report: "ScenarioReport"):
        super().__init__(f"{report.name}: {report.failure}")
        self.report = report


# topology


@dataclass
class TopologySpec:
    director: dict
    origins: list[dict]
    caches: list[dict]
    clients: list[dict] = field(default_factory=list)
    work_dir: Optional[str] = None

    def validate(self) -> "TopologySpec":
        names = [s["name"] for s in self.origins + self.caches]
        dupes = [n for n, c in Counter(names).items() if c > 1]
        if dupes:
            raise InvalidTopology(f"duplicate service names: {dupes}")
        client_names = [c["name"] for c in self.clients]
        if len(set(client_names)) != len(client_names):
            raise InvalidTopology("duplicate client names")
        addrs = [s.get("listen_addr", "127.0.0.1:0")
                 for s in [self.director] + self.origins + self.caches]
        fixed = [a for a in addrs if not a.endswith(":0")]
        if len(set(fixed)) != len(fixed):
            raise InvalidTopology("listen addresses must be distinct")
        for o in self.origins:
            normalize_path(o["prefix"])
        for entity in self.origins + self.caches + self.clients:
            GeoPoint(entity.get("lat", 0.0), entity.get("lon", 0.0))
        return self

    @classmethod
    def from_dict(cls, data: dict) -> "TopologySpec":
        return cls(director=data.get("director", {}), origins=data.get("origins", []),
                   caches=data.get("caches", []), clients=data.get("clients", []),
                   work_dir=data.get("work_dir")).validate()

    @classmethod
    def load(cls, path) -> "TopologySpec":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        spec = cls.from_dict(data)
        base = os.path.dirname(os.path.abspath(path))
        if spec.work_dir and not os.path.isabs(spec.work_dir):
            spec.work_dir = os.path.join(base, spec.work_dir)
        return spec

    def to_dict(self) -> dict:
        return {"director": self.director, "origins": self.origins, "caches": self.caches,
                "clients": self.clients, "work_dir": self.work_dir}


def random_topology(n_origins: int, n_caches: int, n_clients: int = 3, seed: int = 0,
                    cache_capacity: int = 64 << 20) -> TopologySpec:
    """Random geography; the first origin exports ``/bbso``."""
    rng = random.Random(seed)

    def geo():
        return {"lat": round(rng.uniform(-60, 70), 4), "lon": round(rng.uniform(-180, 180), 4)}

    origins = [{"name": f"origin-{i:02d}", "prefix": "/bbso" if i == 0 else f"/project{i:02d}",
                **geo()} for i in range(n_origins)]
    caches = [{"name": f"cache-{i:02d}", "capacity": cache_capacity, **geo()}
              for i in range(n_caches)]
    clients = [{"name": f"client-{i}", **geo()} for i in range(n_clients)]
    return TopologySpec({"listen_addr": "127.0.0.1:0"}, origins, caches, clients).validate()


# processes


@dataclass
class ServiceProcess:
    name: str
    kind: str
    proc: subprocess.Popen
    config: dict
    url: Optional[str] = None
    log_path: Optional[str] = None

    @property
    def alive(self) -> bool:
        return self.proc.poll() is None

    def stderr_tail(self, n: int = 2000) -> str:
        if not self.log_path or not os.path.exists(self.log_path):
            return ""
        with open(self.log_path, encoding="utf-8", errors="replace") as fh:
            return fh.read()[-n:]


def _spawn(module: str, config: dict, work_dir: str, name: str, detach: bool) -> tuple:
    cfg_path = os.path.join(work_dir, "config", f"{name}.json")
    with open(cfg_path, "w", encoding="utf-8") as fh:
        json.dump(config, fh, indent=2)
    log_path = os.path.join(work_dir, "logs", f"{name}.log")
    err = open(log_path, "wb")
    env = dict(os.environ)
    src_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    env["PYTHONPATH"] = os.pathsep.join(filter(None, [src_root, env.get("PYTHONPATH")]))
    proc = subprocess.Popen(
        [sys.executable, "-m", module, "--config", cfg_path],
        stdout=subprocess.PIPE, stderr=err, stdin=subprocess.DEVNULL, env=env,
        start_new_session=detach,
    )
    err.close()
    return proc, log_path


def _await_ready(svc: ServiceProcess, deadline: float) -> None:
    out = svc.proc.stdout
    while True:
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            raise TimeoutError(f"{svc.name} did not start in time")
        ready, _, _ = select.select([out], [], [], min(remaining, 0.5))
        if ready:
            line = out.readline().decode("utf-8", "replace").strip()
            if line.startswith(READY_PREFIX):
                svc.url = line[len(READY_PREFIX):]
                return
            if not line and svc.proc.poll() is not None:
                _raise_start_failure(svc)
        elif svc.proc.poll() is not None:
            _raise_start_failure(svc)


def _raise_start_failure(svc: ServiceProcess) -> None:
    svc.proc.wait()
    tail = svc.stderr_tail()
    if "Address already in use" in tail:
        raise PortInUse(f"{svc.name}: {svc.config.get('listen_addr')}")
    if "REGISTRATION FAILED" in tail:
        detail = tail[tail.index("REGISTRATION FAILED"):].splitlines()[0]
        raise RegistrationFailed(svc.name, detail)
    raise RuntimeError(f"{svc.name} exited with {svc.proc.returncode}: {tail[-500:]}")


class Federation:
    """Handle on a running desk-scale federation."""

    def __init__(self, spec: TopologySpec, work_dir: str, director: ServiceProcess):
        self.spec = spec
        self.work_dir = work_dir
        self.director = director
        self.services: dict[str, ServiceProcess] = {}
        self._closed = False

    @property
    def director_url(self) -> str:
        return self.director.url

    def origins(self) -> list[ServiceProcess]:
        return [s for s in self.services.values() if s.kind == "origin"]

    def caches(self) -> list[ServiceProcess]:
        return [s for s in self.services.values() if s.kind == "cache"]

    def service_for_url(self, url: str) -> Optional[ServiceProcess]:
        for svc in self.services.values():
            if svc.url and url.startswith(svc.url + "/"):
                return svc
        return None

    def client(self, name: Optional[str] = None, geo: Optional[GeoPoint] = None) -> "RecordingClient":
        if name is not None and geo is None:
            spec = next(c for c in self.spec.clients if c["name"] == name)
            geo = GeoPoint(spec["lat"], spec["lon"])
        return RecordingClient(self.director_url, client_geo=geo, client_name=name)

    def list_services(self) -> list[dict]:
        resp = requests.get(self.director_url + "/api/v1/services", timeout=10)
        resp.raise_for_status()
        return resp.json()

    def seed(self, origin: str, path, data: bytes) -> ObjectPath:
        """Place bytes directly in an origin's directory (the ingestion route)."""
        svc = self.services[origin]
        path = normalize_path(path)
        rel = path.relative_to(normalize_path(svc.config["prefix"]))
        target = os.path.join(svc.config["root_dir"], *rel)
        os.makedirs(os.path.dirname(target), exist_ok=True)
        with open(target, "wb") as fh:
            fh.write(data)
        return path

    def flush_accounting(self) -> None:
        for svc in self.services.values():
            if svc.alive:
                requests.post(svc.url + "/admin/flush-accounting", timeout=60).raise_for_status()

    def records(self, **params) -> list[dict]:
        self.flush_accounting()
        resp = requests.get(self.director_url + "/api/v1/accounting", params=params, timeout=30)
        resp.raise_for_status()
        return resp.json()

    def kill(self, name: str) -> None:
        svc = self.services[name]
        svc.proc.kill()
        svc.proc.wait(10)

    def shutdown(self, timeout: float = 15.0) -> None:
        if self._closed:
            return
        self._closed = True
        # services first so their final accounting reaches the director
        _terminate([s.proc for s in self.services.values()], timeout)
        _terminate([self.director.proc], timeout)
        for svc in [self.director, *self.services.values()]:
            if svc.proc.stdout:
                svc.proc.stdout.close()

    def state(self) -> dict:
        return {
            "work_dir": self.work_dir,
            "director_url": self.director_url,
            "pids": {s.name: s.proc.pid for s in [self.director, *self.services.values()]},
            "services": {s.name: s.url for s in self.services.values()},
        }

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.shutdown()


def _terminate(procs: list, timeout: float) -> None:
    for p in procs:
        if p.poll() is None:
            p.send_signal(signal.SIGTERM)
    deadline = time.monotonic() + timeout
    for p in procs:
        try:
            p.wait(max(0.1, deadline - time.monotonic()))
        except subprocess.TimeoutExpired:
            p.kill()
            p.wait()


def launch(spec: TopologySpec, work_dir: Optional[str] = None, timeout: float = 60.0,
           detach: bool = False) -> Federation:
    """Start the director, then every origin and cache, and wait until all
    of them are registered."""
    spec.validate()
    work_dir = work_dir or spec.work_dir or tempfile.mkdtemp(prefix="fedbed-")
    for sub in ("config", "logs", "director", "origins", "caches"):
        os.makedirs(os.path.join(work_dir, sub), exist_ok=True)
    deadline = time.monotonic() + timeout

    dcfg = {
        "listen_addr": spec.director.get("listen_addr", "127.0.0.1:0"),
        "geo_table_path": spec.director.get("geo_table"),
        "staleness_s": spec.director.get("staleness_s", 300.0),
        "data_dir": os.path.join(work_dir, "director"),
    }
    proc, log_path = _spawn("solarfed.director", dcfg, work_dir, "director", detach)
    director = ServiceProcess("director", "director", proc, dcfg, log_path=log_path)
    fed = Federation(spec, work_dir, director)
    try:
        _await_ready(director, deadline)
        pending = []
        for o in spec.origins:
            root = o.get("root_dir") or os.path.join(work_dir, "origins", o["name"])
            os.makedirs(root, exist_ok=True)
            cfg = {"name": o["name"], "prefix": o["prefix"], "root_dir": root,
                   "director_url": director.url, "listen_addr": o.get("listen_addr", "127.0.0.1:0"),
                   "lat": o.get("lat", 0.0), "lon": o.get("lon", 0.0)}
            for opt in ("heartbeat_s", "capacity_bytes"):
                if opt in o:
                    cfg[opt] = o[opt]
            proc, log_path = _spawn("solarfed.origin", cfg, work_dir, o["name"], detach)
            pending.append(ServiceProcess(o["name"], "origin", proc, cfg, log_path=log_path))
        for c in spec.caches:
            store = c.get("store_dir") or os.path.join(work_dir, "caches", c["name"])
            cfg = {"name": c["name"], "store_dir": store, "capacity": c.get("capacity", 64 << 20),
                   "director_url": director.url, "listen_addr": c.get("listen_addr", "127.0.0.1:0"),
                   "lat": c.get("lat", 0.0), "lon": c.get("lon", 0.0)}
            for opt in ("high_watermark", "low_watermark", "heartbeat_s"):
                if opt in c:
                    cfg[opt] = c[opt]
            proc, log_path = _spawn("solarfed.cache", cfg, work_dir, c["name"], detach)
            pending.append(ServiceProcess(c["name"], "cache", proc, cfg, log_path=log_path))
        for svc in pending:
            fed.services[svc.name] = svc
        for svc in pending:
            _await_ready(svc, deadline)

        expected = set(fed.services)
        while True:
            registered = {s["name"] for s in fed.list_services()}
            if expected <= registered:
                break
            if time.monotonic() > deadline:
                raise TimeoutError(f"unregistered: {sorted(expected - registered)}")
            time.sleep(0.05)
    except BaseException:
        fed.shutdown()
        raise
    return fed


# scenarios


class RecordingClient(FedClient):
    """FedClient that remembers every completed fetch and store."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.fetches: list[tuple[str, FetchResult]] = []
        self.stores: list[dict] = []
        self._lock = threading.Lock()

    def fetch_plan(self, plan: FetchPlan, dest) -> FetchResult:
        result = super().fetch_plan(plan, dest)
        with self._lock:
            self.fetches.append((plan.sources[-1], result))
        return result

    def store(self, src, path) -> dict:
        out = super().store(src, path)
        with self._lock:
            self.stores.append(out)
        return out


@dataclass
class ScenarioReport:
    name: str
    passed: bool = True
    failure: Optional[str] = None
    evidence: dict = field(default_factory=dict)

    def check(self, condition: bool, message: str) -> None:
        if not condition:
            self.passed = False
            self.failure = message
            raise ScenarioFailed(self)

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "failure": self.failure,
                "evidence": self.evidence}


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _read(path) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def _first_client(fed: Federation) -> str:
    if not fed.spec.clients:
        raise InvalidTopology("scenarios need at least one client")
    return fed.spec.clients[0]["name"]


def _scenario_path(fed: Federation, stem: str) -> tuple[str, ObjectPath]:
    origin = fed.origins()[0]
    tag = f"{int(time.time() * 1000)}-{random.randrange(1 << 30)}"
    return origin.name, normalize_path(origin.config["prefix"]).join("scenario", f"{stem}-{tag}")


def scenario_cold_hot(fed: Federation, report: ScenarioReport, scratch: str) -> None:
    origin, path = _scenario_path(fed, "cold-hot.bin")
    data = os.urandom(200_000)
    fed.seed(origin, path, data)
    client = fed.client(_first_client(fed))
    first = client.fetch(path, os.path.join(scratch, "a"))
    second = client.fetch(path, os.path.join(scratch, "b"))
    a, b = _read(os.path.join(scratch, "a")), _read(os.path.join(scratch, "b"))
    report.evidence.update({
        "path": str(path), "first": [first.source_used, first.cache_hit],
        "second": [second.source_used, second.cache_hit],
        "sha256": [_sha256(data), _sha256(a), _sha256(b)],
    })
    report.check(first.cache_hit is False, f"first fetch not a MISS: {first}")
    report.check(second.cache_hit is True, f"second fetch not a HIT: {second}")
    report.check(a == data and b == data, "fetched bytes differ from the origin copy")


def scenario_stampede(fed: Federation, report: ScenarioReport, scratch: str,
                      n_clients: int = 8) -> None:
    origin, path = _scenario_path(fed, "stampede.bin")
    data = os.urandom(1_000_000)
    fed.seed(origin, path, data)
    client = fed.client(_first_client(fed))
    cache_url = client.locate(path).cache_urls[0]
    barrier = threading.Barrier(n_clients)

    def one(i):
        barrier.wait()
        resp = requests.get(cache_url, headers={"X-Client-Name": f"stampede-{i}"}, timeout=60)
        return resp.status_code, resp.headers.get("X-Cache"), resp.content

    with ThreadPoolExecutor(n_clients) as pool:
        results = list(pool.map(one, range(n_clients)))
    records = [r for r in fed.records() if r["path"] == str(path)]
    origin_serves = [r for r in records if r["kind"] == "origin" and r["direction"] == "serve"]
    report.evidence.update({
        "path": str(path), "cache_url": cache_url,
        "x_cache": [r[1] for r in results],
        "origin_serve_records": origin_serves,
    })
    report.check(all(r[0] == 200 for r in results), "a concurrent GET failed")
    report.check(all(r[2] == data for r in results), "a concurrent GET returned wrong bytes")
    report.check(len(origin_serves) == 1,
                 f"expected 1 origin serve record, found {len(origin_serves)}")


def scenario_failover(fed: Federation, report: ScenarioReport, scratch: str) -> None:
    origin, path = _scenario_path(fed, "failover.bin")
    data = os.urandom(50_000)
    fed.seed(origin, path, data)
    client = fed.client(_first_client(fed))
    plan = client.plan(path)
    report.check(len(plan.sources) >= 2, "failover needs at least one cache")
    victim = fed.service_for_url(plan.sources[0])
    fed.kill(victim.name)
    result = client.fetch(path, os.path.join(scratch, "f"))
    report.evidence.update({"killed": victim.name, "plan": plan.sources,
                            "source_used": result.source_used, "attempts": result.attempts})
    report.check(result.source_used == plan.sources[1],
                 f"expected fallback to {plan.sources[1]}, got {result.source_used}")
    report.check(_read(os.path.join(scratch, "f")) == data, "fallback bytes differ")


def scenario_bbso_cycle(fed: Federation, report: ScenarioReport, scratch: str) -> None:
    from .filament.config import PipelineConfig
    from .filament.pipeline import run_pipeline
    from .filament.synth import make_disk, synthetic_fits
    from .fits import write_fits

    origin, raw_dir = _scenario_path(fed, "cycle")
    prefix = normalize_path(fed.services[origin].config["prefix"])
    stem = raw_dir.name
    raw_path = prefix.join("raw", f"{stem}.fits")
    out_prefix = prefix.join("processed")
    image = write_fits(synthetic_fits(make_disk(noise=0.02, seed=7)), -32)
    fed.seed(origin, raw_path, image)

    names = [c["name"] for c in fed.spec.clients]
    user = fed.client(names[0])
    first = user.fetch(raw_path, os.path.join(scratch, "input.fits"))
    report.check(_read(os.path.join(scratch, "input.fits")) == image, "input bytes differ")
    report.check(fed.service_for_url(first.source_used).kind == "cache",
                 "input was not served by a cache")
    cache_a = first.source_used.split("/data/")[0]

    staging = os.path.join(scratch, "products")
    run = run_pipeline(raw_path, out_prefix, PipelineConfig(), client=user, staging_dir=staging)
    report.evidence["pipeline"] = run.to_dict()

    # re-fetch each product as a second user through a cache other than the first
    other = next((n for n in names[1:]
                  if not fed.client(n).locate(raw_path).cache_urls[0].startswith(cache_a + "/")),
                 names[-1])
    reader = fed.client(other)
    compared = {}
    for fname, fed_path in run.products.items():
        plan = reader.plan(fed_path)
        sources = [s for s in plan.sources if not s.startswith(cache_a + "/")]
        dest = os.path.join(scratch, "refetch-" + fname)
        result = reader.fetch_plan(FetchPlan(sources), dest)
        local = _read(run.local_products[fname])
        remote = _read(dest)
        compared[fname] = {"source": result.source_used, "cache_hit": result.cache_hit,
                           "local_sha256": _sha256(local), "remote_sha256": _sha256(remote)}
        report.check(fed.service_for_url(result.source_used).kind == "cache",
                     f"{fname} was not served by a cache")
        report.check(not result.source_used.startswith(cache_a + "/"),
                     f"{fname} came back through the first cache")
        report.check(local == remote, f"{fname} differs after the round trip")
    report.evidence["products"] = compared

    paths = {str(raw_path), *run.products.values()}
    _check_conservation(fed, report, [user, reader], paths)


def _check_conservation(fed: Federation, report: ScenarioReport, clients: list,
                        paths: set) -> None:
    """Client-observed bytes must equal the serving services' records, exactly."""
    client_names = {c.client_name for c in clients}
    records = [r for r in fed.records() if r["path"] in paths]
    serves = [r for r in records if r["direction"] == "serve" and r["client"] in client_names]
    expected = Counter()
    observed_bytes = 0
    for c in clients:
        for _, res in c.fetches:
            svc = fed.service_for_url(res.source_used)
            path = "/" + res.source_used.split("/data/", 1)[1]
            expected[(svc.name, path, res.bytes, c.client_name)] += 1
            observed_bytes += res.bytes
    actual = Counter((r["service"], r["path"], r["bytes"], r["client"]) for r in serves)
    stored_bytes = sum(s["bytes"] for c in clients for s in c.stores)
    ingests = [r for r in records if r["kind"] == "origin" and r["direction"] == "ingest"
               and r["client"] in client_names]
    cache_names = {s.name for s in fed.caches()}
    cache_pulls = sum(r["bytes"] for r in records if r["kind"] == "origin"
                      and r["direction"] == "serve" and r["client"] in cache_names)
    cache_ingest = sum(r["bytes"] for r in records if r["kind"] == "cache"
                       and r["direction"] == "ingest")
    report.evidence["accounting"] = {
        "client_observed_bytes": observed_bytes,
        "serve_record_bytes": sum(r["bytes"] for r in serves),
        "stored_bytes": stored_bytes,
        "origin_ingest_bytes": sum(r["bytes"] for r in ingests),
        "origin_to_cache_bytes": cache_pulls,
        "cache_ingest_bytes": cache_ingest,
        "records": len(records),
    }
    acc = report.evidence["accounting"]
    report.check(expected == actual, "client fetches and serve records do not match one-to-one")
    report.check(acc["client_observed_bytes"] == acc["serve_record_bytes"],
                 "served bytes are not conserved")
    report.check(acc["stored_bytes"] == acc["origin_ingest_bytes"],
                 "stored bytes are not conserved")
    report.check(acc["origin_to_cache_bytes"] == acc["cache_ingest_bytes"],
                 "origin-to-cache bytes are not conserved")


SCENARIOS: dict[str, Callable] = {
    "cold-hot": scenario_cold_hot,
    "stampede": scenario_stampede,
    "failover": scenario_failover,
    "bbso-cycle": scenario_bbso_cycle,
}


def run_scenario(fed: Federation, name: str) -> ScenarioReport:
    """Run a named scenario; raises ScenarioFailed at the first violated check."""
    if name not in SCENARIOS:
        raise ValueError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}")
    report = ScenarioReport(name)
    with tempfile.TemporaryDirectory(prefix=f"scenario-{name}-") as scratch:
        SCENARIOS[name](fed, report, scratch)
    return report


# CLI


DEFAULT_STATE = ".fedbed-state.json"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="fedbed", description="desk-scale federation testbed")
    sub = parser.add_subparsers(dest="command", required=True)
    up = sub.add_parser("up", help="launch a federation in the background")
    up.add_argument("--topology", required=True)
    up.add_argument("--state", default=DEFAULT_STATE)
    run = sub.add_parser("run", help="launch, run one scenario, shut down")
    run.add_argument("scenario", choices=sorted(SCENARIOS))
    run.add_argument("--topology", required=True)
    down = sub.add_parser("down", help="stop a federation started with 'up'")
    down.add_argument("--state", default=DEFAULT_STATE)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")

    if args.command == "up":
        fed = launch(TopologySpec.load(args.topology), detach=True)
        state = fed.state()
        with open(args.state, "w", encoding="utf-8") as fh:
            json.dump(state, fh, indent=2)
        print(json.dumps(state, indent=2))
        return 0
    if args.command == "down":
        with open(args.state, encoding="utf-8") as fh:
            state = json.load(fh)
        pids = state["pids"]
        order = [n for n in pids if n != "director"] + ["director"]
        for name in order:
            _stop_pid(pids[name])
        os.unlink(args.state)
        return 0

    with launch(TopologySpec.load(args.topology)) as fed:
        try:
            report = run_scenario(fed, args.scenario)
        except ScenarioFailed as exc:
            report = exc.report
    print(json.dumps(report.to_dict(), indent=2, default=str))
    return 0 if report.passed else 1


def _stop_pid(pid: int, timeout: float = 10.0) -> None:
    try:
        os.kill(pid, signal.SIGTERM)
    except ProcessLookupError:
        return
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        try:
            os.kill(pid, 0)
        except ProcessLookupError:
            return
        time.sleep(0.05)
    try:
        os.kill(pid, signal.SIGKILL)
    except ProcessLookupError:
        pass


if __name__ == "__main__":
    sys.exit(main())
