import os
import threading

import pytest

from solarfed import _http
from solarfed.accounting import AccountingLog, RecordEmitter
from solarfed.cache import CacheConfig, CacheHandler, PullThroughCache
from solarfed.director import Director, DirectorHandler
from solarfed.origin import Origin, OriginConfig, OriginHandler


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): exit criterion")


_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    number = getattr(report, "acceptance", None)
    if number is not None:
        _ACCEPTANCE[number] = (report.user_properties, report.outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is not None:
        rep.acceptance = marker.args[0]
        rep.user_properties = [("title", marker.args[1])]


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        props, outcome = _ACCEPTANCE[number]
        title = dict(props).get("title", "")
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[{status}] {number:>2}. {title}")


class Running:
    """A service app served from a background thread in this process."""

    def __init__(self, app, handler):
        self.app = app
        self.server = _http.ServiceServer("127.0.0.1:0", handler, app)
        self.url = self.server.url
        self.thread = threading.Thread(target=self.server.serve_forever, args=(0.05,), daemon=True)
        self.thread.start()

    def stop(self):
        self.server.shutdown()
        self.server.server_close()


@pytest.fixture
def stack(tmp_path):
    """Factory for in-process director/origin/cache services on loopback."""
    started = []
    emitters = []

    class Stack:
        def director(self, **kwargs):
            kwargs.setdefault("accounting", AccountingLog(str(tmp_path / "acct.ndjson")))
            d = Running(Director(**kwargs), DirectorHandler)
            started.append(d)
            return d

        def origin(self, director_url, name="origin-a", prefix="/bbso", lat=0.0, lon=0.0,
                   root=None, register=True, **extra):
            root = root or tmp_path / f"root-{name}"
            os.makedirs(root, exist_ok=True)
            cfg = OriginConfig(name=name, prefix=prefix, root_dir=str(root),
                               director_url=director_url, lat=lat, lon=lon, **extra)
            emitter = RecordEmitter(director_url).start()
            emitters.append(emitter)
            o = Running(Origin(cfg, emitter), OriginHandler)
            o.app.base_url = o.url
            o.root = str(root)
            if register:
                _http.register(director_url, o.app.registration())
            started.append(o)
            return o

        def cache(self, director_url, name="cache-a", capacity=1 << 20, lat=0.0, lon=0.0,
                  register=True, **extra):
            cfg = CacheConfig(name=name, director_url=director_url,
                              store_dir=str(tmp_path / f"store-{name}"), capacity=capacity,
                              lat=lat, lon=lon, **extra)
            emitter = RecordEmitter(director_url).start()
            emitters.append(emitter)
            c = Running(PullThroughCache(cfg, emitter), CacheHandler)
            c.app.base_url = c.url
            if register:
                _http.register(director_url, c.app.registration())
            started.append(c)
            return c

    yield Stack()
    for e in emitters:
        e.stop(timeout=5)
    for s in reversed(started):
        s.stop()


def seed_file(root, rel, data: bytes):
    path = os.path.join(root, rel)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(data)
    return path
