"""Client geolocation and proximity ranking of caches."""

from __future__ import annotations

import csv
import io
import ipaddress
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

EARTH_RADIUS_KM = 6371.0


class GeoTableParse(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        lat, lon = float(self.lat), float(self.lon)
        if not (math.isfinite(lat) and math.isfinite(lon)):
            raise ValueError("coordinates must be finite")
        if not -90.0 <= lat <= 90.0:
            raise ValueError(f"latitude out of range: {lat}")
        if not -180.0 <= lon <= 180.0:
            raise ValueError(f"longitude out of range: {lon}")
        object.__setattr__(self, "lat", lat)
        object.__setattr__(self, "lon", lon)

    @classmethod
    def parse(cls, text: str) -> "GeoPoint":
        """Parse ``"lat,lon"`` (the X-Client-Geo header form)."""
        parts = text.split(",")
        if len(parts) != 2:
            raise ValueError(f"expected 'lat,lon', got {text!r}")
        return cls(float(parts[0]), float(parts[1]))

    def __str__(self) -> str:
        return f"{self.lat!r},{self.lon!r}"


@dataclass(frozen=True)
class GeoTable:
    rows: tuple[tuple[ipaddress.IPv4Network | ipaddress.IPv6Network, GeoPoint], ...] = ()

    def __len__(self) -> int:
        return len(self.rows)


def load_geo_table(source) -> GeoTable:
    """Parse ``cidr,lat,lon`` CSV (with header) from bytes, text or a binary stream."""
    if isinstance(source, (bytes, bytearray)):
        text = bytes(source).decode("utf-8")
    elif isinstance(source, str):
        text = source
    else:
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data

    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise GeoTableParse(1, "missing header row") from None
    if [h.strip() for h in header] != ["cidr", "lat", "lon"]:
        raise GeoTableParse(1, f"header must be cidr,lat,lon, got {header!r}")

    rows = []
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise GeoTableParse(line, f"expected 3 columns, got {len(row)}")
        try:
            net = ipaddress.ip_network(row[0].strip(), strict=False)
        except ValueError as exc:
            raise GeoTableParse(line, f"bad cidr {row[0]!r}") from exc
        try:
            point = GeoPoint(float(row[1]), float(row[2]))
        except ValueError as exc:
            raise GeoTableParse(line, str(exc)) from exc
        rows.append((net, point))
    return GeoTable(tuple(rows))


def load_geo_table_file(path) -> GeoTable:
    with open(path, "rb") as fh:
        return load_geo_table(fh)


def lookup_client(table: GeoTable, ip, override: Optional[GeoPoint] = None) -> Optional[GeoPoint]:
    if override is not None:
        return override
    try:
        addr = ipaddress.ip_address(ip)
    except ValueError:
        return None
    best = None
    for net, point in table.rows:
        if addr.version == net.version and addr in net:
            if best is None or net.prefixlen > best[0].prefixlen:
                best = (net, point)
    return None if best is None else best[1]


def haversine_km(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance on a sphere of radius 6371 km.

    The endpoints are ordered before evaluation so that the result is
    bit-for-bit symmetric.
    """
    if (b.lat, b.lon) < (a.lat, a.lon):
        a, b = b, a
    phi1 = math.radians(a.lat)
    phi2 = math.radians(b.lat)
    dphi = phi2 - phi1
    dlam = math.radians(b.lon - a.lon)
    h = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2) ** 2
    h = min(1.0, max(0.0, h))
    return 2 * EARTH_RADIUS_KM * math.asin(math.sqrt(h))


def rank_caches(client: Optional[GeoPoint], caches: Iterable) -> list:
    """Order cache records nearest-first, ties (and unknown clients) by name.

    Records need ``.name`` and ``.location`` attributes.
    """
    caches = list(caches)
    if client is None:
        return sorted(caches, key=lambda c: c.name)
    return sorted(caches, key=lambda c: (haversine_km(client, c.location), c.name))

