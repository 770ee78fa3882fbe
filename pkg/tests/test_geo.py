import io
import math
import random

import pytest
from hypothesis import given, strategies as st

from solarfed.geo import (
    EARTH_RADIUS_KM,
    GeoPoint,
    GeoTableParse,
    haversine_km,
    load_geo_table,
    lookup_client,
    rank_caches,
)
from solarfed.director import ServiceRecord


def chord_distance_km(a, b):
    """Independent oracle: straight chord between unit vectors, then arc length."""
    def vec(p):
        la, lo = math.radians(p[0]), math.radians(p[1])
        return (math.cos(la) * math.cos(lo), math.cos(la) * math.sin(lo), math.sin(la))
    u, v = vec(a), vec(b)
    chord = math.sqrt(sum((x - y) ** 2 for x, y in zip(u, v)))
    return 2 * 6371.0 * math.asin(min(1.0, chord / 2))


def cache(name, lat, lon):
    return ServiceRecord(name, "cache", f"http://{name}.test", GeoPoint(lat, lon))


def test_load_table():
    table = load_geo_table(io.BytesIO(b"cidr,lat,lon\n10.0.0.0/8,32.7157,-117.1611"))
    assert len(table) == 1
    assert table.rows[0][1] == GeoPoint(32.7157, -117.1611)
    assert len(load_geo_table(b"cidr,lat,lon\n")) == 0


@pytest.mark.parametrize("body, line", [
    (b"cidr,lat,lon\n10.0.0.0/8,91,0\n", 2),
    (b"cidr,lat,lon\n10.0.0.0/8,0,0\n10.0.0.0/8,0,181\n", 3),
    (b"cidr,lat,lon\nnot-a-cidr,0,0\n", 2),
    (b"cidr,lat,lon\n10.0.0.0/8,0\n", 2),
    (b"ip,lat,lon\n", 1),
])
def test_load_table_errors(body, line):
    with pytest.raises(GeoTableParse) as err:
        load_geo_table(body)
    assert err.value.line == line


def test_lookup():
    table = load_geo_table(b"cidr,lat,lon\n10.0.0.0/8,1,1\n10.1.0.0/16,2,2\n2001:db8::/32,3,3\n")
    assert lookup_client(table, "10.1.2.3") == GeoPoint(2, 2)  # longest prefix
    assert lookup_client(table, "10.9.9.9") == GeoPoint(1, 1)
    assert lookup_client(table, "192.168.0.1") is None
    assert lookup_client(table, "2001:db8::1") == GeoPoint(3, 3)
    assert lookup_client(table, "10.1.2.3", GeoPoint(0, 0)) == GeoPoint(0, 0)


def test_haversine_examples():
    a = GeoPoint(32.7157, -117.1611)
    b = GeoPoint(41.8781, -87.6298)
    assert haversine_km(a, a) == 0.0
    oracle = chord_distance_km((a.lat, a.lon), (b.lat, b.lon))
    assert haversine_km(a, b) == pytest.approx(oracle, rel=1e-6)
    assert haversine_km(GeoPoint(0, 0), GeoPoint(0, 180)) == pytest.approx(
        math.pi * EARTH_RADIUS_KM, rel=1e-9)


points = st.builds(GeoPoint, st.floats(-90, 90), st.floats(-180, 180))


@given(points, points)
def test_haversine_properties(a, b):
    d = haversine_km(a, b)
    assert d == haversine_km(b, a)
    assert haversine_km(a, a) == 0.0
    assert 0.0 <= d <= math.pi * EARTH_RADIUS_KM
    assert d == pytest.approx(chord_distance_km((a.lat, a.lon), (b.lat, b.lon)), rel=1e-6, abs=1e-6)


def test_rank_examples():
    only = cache("solo", 10, 10)
    assert rank_caches(GeoPoint(0, 0), [only]) == [only]
    b, a = cache("b", 0, 1), cache("a", 0, 2)
    assert [c.name for c in rank_caches(GeoPoint(0, 0), [a, b])] == ["b", "a"]
    x, y = cache("x", 0, 1), cache("y", 0, -1)
    assert [c.name for c in rank_caches(GeoPoint(0, 0), [y, x])] == ["x", "y"]
    assert [c.name for c in rank_caches(None, [b, a, y, x])] == ["a", "b", "x", "y"]
    assert rank_caches(GeoPoint(0, 0), []) == []


def test_rank_matches_oracle_and_is_scale_invariant():
    rng = random.Random(3)
    for _ in range(50):
        caches = [cache(f"c{i}", rng.uniform(-90, 90), rng.uniform(-180, 180)) for i in range(12)]
        client = GeoPoint(rng.uniform(-90, 90), rng.uniform(-180, 180))
        ranked = [c.name for c in rank_caches(client, caches)]
        oracle = [c.name for c in sorted(
            caches, key=lambda c: (chord_distance_km((client.lat, client.lon),
                                                     (c.location.lat, c.location.lon)), c.name))]
        assert ranked == oracle
        # ordering by scaled distances is the same ordering
        scaled = sorted(caches, key=lambda c: (1000.0 * haversine_km(client, c.location), c.name))
        assert ranked == [c.name for c in scaled]
        assert ranked == [c.name for c in rank_caches(client, list(reversed(caches)))]
