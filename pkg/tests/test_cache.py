import hashlib
import os
import random
import threading
from concurrent.futures import ThreadPoolExecutor

import pytest
import requests
from hypothesis import HealthCheck, given, settings, strategies as st

from conftest import seed_file
from lru_oracle import simulate


def flush(*services):
    for s in services:
        assert requests.post(s.url + "/admin/flush-accounting").json()["ok"]


@pytest.fixture
def trio(stack):
    d = stack.director()
    o = stack.origin(d.url)
    c = stack.cache(d.url, capacity=16 << 20)
    return d, o, c


def get(c, rel, **headers):
    return requests.get(c.url + "/data/bbso/" + rel, headers=headers)


def test_cold_then_hot(trio):
    d, o, c = trio
    blob = os.urandom(5000)
    seed_file(o.root, "raw/a.fits", blob)
    first, second = get(c, "raw/a.fits"), get(c, "raw/a.fits")
    assert first.headers["X-Cache"] == "MISS" and second.headers["X-Cache"] == "HIT"
    assert first.content == second.content == blob
    assert second.headers["X-Service-Name"] == "cache-a"
    flush(c, o)
    recs = [r for r in d.app.accounting.records() if r.path == "/bbso/raw/a.fits"]
    kinds = sorted((r.service, r.direction, r.cache_hit) for r in recs)
    assert kinds == [("cache-a", "ingest", None), ("cache-a", "serve", False),
                     ("cache-a", "serve", True), ("origin-a", "serve", None)]
    assert all(r.bytes == 5000 for r in recs)


def test_concurrent_cold_gets_fetch_once(trio):
    d, o, c = trio
    blob = os.urandom(2_000_000)
    seed_file(o.root, "raw/big.fits", blob)
    barrier = threading.Barrier(8)

    def one(_):
        barrier.wait()
        return get(c, "raw/big.fits")

    with ThreadPoolExecutor(8) as pool:
        results = list(pool.map(one, range(8)))
    assert all(r.status_code == 200 and r.content == blob for r in results)
    flush(c, o)
    origin_serves = [r for r in d.app.accounting.records()
                     if r.service == "origin-a" and r.path == "/bbso/raw/big.fits"]
    assert len(origin_serves) == 1
    assert c.app.origin_fetches == 1


def test_missing_and_unknown(trio):
    d, o, c = trio
    assert get(c, "raw/nothing.fits").status_code == 404
    assert c.app.usage()["object_count"] == 0
    assert os.listdir(c.app.tmp_dir) == []
    r = requests.get(c.url + "/data/elsewhere/x")
    assert r.status_code == 404


def test_origin_unreachable(stack):
    d = stack.director()
    requests.post(d.url + "/api/v1/register", json={
        "name": "ghost", "kind": "origin", "base_url": "http://127.0.0.1:9",
        "lat": 0, "lon": 0, "prefixes": ["/ghost"]})
    c = stack.cache(d.url)
    r = requests.get(c.url + "/data/ghost/x")
    assert r.status_code == 502 and r.json()["error"] == "OriginUnreachable"


def test_ranges_on_miss_and_hit(trio):
    _, o, c = trio
    seed_file(o.root, "r.bin", b"0123456789")
    r = get(c, "r.bin", Range="bytes=2-4")
    assert r.status_code == 206 and r.content == b"234" and r.headers["X-Cache"] == "MISS"
    r = get(c, "r.bin", Range="bytes=5-")
    assert r.status_code == 206 and r.content == b"56789" and r.headers["X-Cache"] == "HIT"
    assert get(c, "r.bin", Range="bytes=10-12").status_code == 416
    assert c.app.usage()["bytes_used"] == 10


def test_usage_and_purge(trio):
    _, o, c = trio
    assert requests.get(c.url + "/admin/usage").json() == {
        "bytes_used": 0, "capacity": 16 << 20, "object_count": 0}
    seed_file(o.root, "ten.bin", b"x" * 10)
    get(c, "ten.bin")
    assert requests.get(c.url + "/admin/usage").json() == {
        "bytes_used": 10, "capacity": 16 << 20, "object_count": 1}
    r = requests.delete(c.url + "/admin/purge/bbso/ten.bin")
    assert r.json() == {"ok": True, "purged": True}
    assert requests.get(c.url + "/admin/usage").json()["bytes_used"] == 0
    assert get(c, "ten.bin").headers["X-Cache"] == "MISS"
    r = requests.delete(c.url + "/admin/purge/bbso/never.bin")
    assert r.status_code == 200 and r.json()["purged"] is False


def test_purge_during_serve(trio):
    _, o, c = trio
    blob = os.urandom(4_000_000)
    seed_file(o.root, "slow.bin", blob)
    get(c, "slow.bin")
    with requests.get(c.url + "/data/bbso/slow.bin", stream=True) as r:
        head = r.raw.read(1000)
        assert requests.delete(c.url + "/admin/purge/bbso/slow.bin").json()["purged"]
        rest = r.raw.read()
    assert head + rest == blob
    assert c.app.usage()["object_count"] == 0


def test_oversized_objects_pass_through(stack):
    d = stack.director()
    o = stack.origin(d.url)
    c = stack.cache(d.url, capacity=1000)
    big = os.urandom(900)  # above the 800-byte low watermark
    seed_file(o.root, "big.bin", big)
    for _ in range(2):
        r = get(c, "big.bin")
        assert r.content == big and r.headers["X-Cache"] == "MISS"
    assert c.app.usage() == {"bytes_used": 0, "capacity": 1000, "object_count": 0}
    assert os.listdir(c.app.tmp_dir) == []


def test_watermark_eviction_over_http(stack):
    d = stack.director()
    o = stack.origin(d.url)
    c = stack.cache(d.url, capacity=100)
    for name, size in (("A", 40), ("B", 40), ("C", 15)):
        seed_file(o.root, name, b"." * size)
        get(c, name)
    assert c.app.usage()["bytes_used"] == 55
    assert not os.path.exists(os.path.join(c.app.objects_dir, "bbso", "A"))
    assert get(c, "B").headers["X-Cache"] == "HIT"
    assert get(c, "A").headers["X-Cache"] == "MISS"


def test_http_trace_matches_oracle(stack):
    d = stack.director()
    o = stack.origin(d.url)
    c = stack.cache(d.url, capacity=1000)
    rng = random.Random(2)
    sizes = {k: rng.choice([50, 100, 150]) for k in range(15)}
    for k, size in sizes.items():
        seed_file(o.root, f"obj{k}", bytes([k]) * size)
    trace = [rng.randrange(15) for _ in range(200)]
    s = requests.Session()
    for k in trace:
        r = s.get(f"{c.url}/data/bbso/obj{k}")
        assert r.content == bytes([k]) * sizes[k]
        usage = c.app.usage()
        assert usage["bytes_used"] <= 0.9 * 1000
    cached = {int(p.name[3:]) for p in c.app.index.keys()}
    assert cached == simulate(trace, sizes, 1000)
    on_disk = set(os.listdir(os.path.join(c.app.objects_dir, "bbso")))
    assert on_disk == {f"obj{k}" for k in cached}


@settings(max_examples=10, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(st.binary(min_size=0, max_size=300_000))
def test_hits_are_bit_identical(trio, blob):
    _, o, c = trio
    name = "p-" + hashlib.sha1(blob).hexdigest()
    seed_file(o.root, name, blob)
    miss = get(c, name)
    hit = get(c, name)
    assert hit.headers["X-Cache"] == "HIT"
    assert hashlib.sha256(hit.content).digest() == hashlib.sha256(blob).digest() == \
        hashlib.sha256(miss.content).digest()


def test_restart_reloads_store(stack, tmp_path):
    d = stack.director()
    o = stack.origin(d.url)
    c = stack.cache(d.url, name="keep")
    seed_file(o.root, "k.bin", b"k" * 10)
    get(c, "k.bin")
    c.stop()
    again = stack.cache(d.url, name="keep")
    assert again.app.usage()["object_count"] == 1
    assert get(again, "k.bin").headers["X-Cache"] == "HIT"
