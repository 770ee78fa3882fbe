"""Federation namespace: canonical object paths and longest-prefix matching."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional
from urllib.parse import unquote


class MalformedPath(ValueError):
    pass


_FORBIDDEN_SEGMENTS = {".", ".."}


@dataclass(frozen=True, order=True)
class ObjectPath:
    """Canonical federation path; ``str()`` gives the wire form ``/a/b/c``."""

    segments: tuple[str, ...]

    def __post_init__(self):
        if not self.segments:
            raise MalformedPath("the root is not a valid object path")
        for seg in self.segments:
            _check_segment(seg)

    def __str__(self) -> str:
        return "/" + "/".join(self.segments)

    @property
    def name(self) -> str:
        return self.segments[-1]

    @property
    def parent(self) -> Optional["ObjectPath"]:
        if len(self.segments) == 1:
            return None
        return ObjectPath(self.segments[:-1])

    def join(self, *parts: str) -> "ObjectPath":
        extra: list[str] = []
        for part in parts:
            extra.extend(normalize_path("/" + part).segments)
        return ObjectPath(self.segments + tuple(extra))

    def is_under(self, prefix: "ObjectPath") -> bool:
        n = len(prefix.segments)
        return self.segments[:n] == prefix.segments

    def relative_to(self, prefix: "ObjectPath") -> tuple[str, ...]:
        if not self.is_under(prefix):
            raise ValueError(f"{self} is not under {prefix}")
        return self.segments[len(prefix.segments):]


# Prefixes share the representation of object paths.
NamespacePrefix = ObjectPath


def _check_segment(seg: str) -> None:
    if not seg:
        raise MalformedPath("empty path segment")
    if seg in _FORBIDDEN_SEGMENTS:
        raise MalformedPath(f"forbidden path segment {seg!r}")
    if "/" in seg:
        raise MalformedPath(f"segment contains '/': {seg!r}")
    if any(ord(c) < 0x20 or ord(c) == 0x7F for c in seg):
        raise MalformedPath("path contains control characters")


def normalize_path(raw) -> ObjectPath:
    """Canonicalize ``raw``: collapse repeated ``/`` and drop a trailing one.

    ``.``/``..`` segments and control characters are rejected rather than
    resolved. Accepts an ``ObjectPath`` unchanged.
    """
    if isinstance(raw, ObjectPath):
        return raw
    if not isinstance(raw, str) or not raw:
        raise MalformedPath("path must be non-empty text")
    if any(ord(c) < 0x20 or ord(c) == 0x7F for c in raw):
        raise MalformedPath("path contains control characters")
    segments = tuple(s for s in raw.split("/") if s)
    if not segments:
        raise MalformedPath("the root is not a valid object path")
    return ObjectPath(segments)


def path_from_url(encoded: str) -> ObjectPath:
    """Decode a percent-encoded URL path into an ``ObjectPath``.

    Each segment is unquoted separately; an encoded ``/`` (``%2F``) is rejected.
    """
    if not encoded:
        raise MalformedPath("empty path")
    parts = [p for p in encoded.split("/") if p]
    decoded = []
    for part in parts:
        try:
            seg = unquote(part, errors="strict")
        except UnicodeDecodeError as exc:
            raise MalformedPath("path is not valid UTF-8") from exc
        if "/" in seg:
            raise MalformedPath("encoded '/' in path segment")
        decoded.append(seg)
    if not decoded:
        raise MalformedPath("the root is not a valid object path")
    return ObjectPath(tuple(decoded))


def match_prefix(path: ObjectPath, prefixes: Iterable[ObjectPath]) -> Optional[ObjectPath]:
    """Longest prefix in ``prefixes`` whose segments lead ``path``; None if none match."""
    best = None
    for prefix in prefixes:
        if path.is_under(prefix):
            if best is None or len(prefix.segments) > len(best.segments):
                best = prefix
    return best


class UnknownNamespace(LookupError):
    """No registered origin exports a prefix of the requested path."""
