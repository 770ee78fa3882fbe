"""Size-aware LRU index with watermark hysteresis.

Pure bookkeeping: no I/O. The cache service keeps files on disk in step
with the paths this index reports as inserted and evicted.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Optional


@dataclass
class CacheEntry:
    key: Hashable
    size: int
    last_access: int
    readers: int = 0


class LRUIndex:
    def __init__(self, capacity: int, high_watermark: float = 0.90, low_watermark: float = 0.80):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        if not 0 < low_watermark < high_watermark <= 1:
            raise ValueError("need 0 < low_watermark < high_watermark <= 1")
        self.capacity = capacity
        self.high_watermark = high_watermark
        self.low_watermark = low_watermark
        self._entries: dict[Hashable, CacheEntry] = {}
        self._seq = 0
        self.bytes_used = 0

    def __contains__(self, key) -> bool:
        return key in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def keys(self) -> set:
        return set(self._entries)

    def get(self, key) -> Optional[CacheEntry]:
        return self._entries.get(key)

    def _tick(self) -> int:
        self._seq += 1
        return self._seq

    def admits(self, size: int) -> bool:
        """Objects above the low watermark are proxied, never stored."""
        return size <= self.low_watermark * self.capacity

    def touch(self, key) -> Optional[CacheEntry]:
        entry = self._entries.get(key)
        if entry is not None:
            entry.last_access = self._tick()
        return entry

    def insert(self, key, size: int, pinned: bool = False) -> list:
        """Add (or replace) an entry and return the keys evicted as a result.

        ``pinned`` registers a reader before eviction runs, so the new entry
        itself cannot be chosen.
        """
        if size < 0:
            raise ValueError("size must be non-negative")
        old = self._entries.pop(key, None)
        if old is not None:
            self.bytes_used -= old.size
        readers = (old.readers if old else 0) + (1 if pinned else 0)
        self._entries[key] = CacheEntry(key, size, self._tick(), readers)
        self.bytes_used += size
        return self.evict_to_watermark()

    def remove(self, key) -> bool:
        entry = self._entries.pop(key, None)
        if entry is None:
            return False
        self.bytes_used -= entry.size
        return True

    def pin(self, key) -> None:
        self._entries[key].readers += 1

    def unpin(self, key) -> list:
        """Drop a reader; evictions deferred while it was active happen now."""
        entry = self._entries.get(key)
        if entry is not None and entry.readers > 0:
            entry.readers -= 1
        return self.evict_to_watermark()

    def evict_to_watermark(self) -> list:
        if self.bytes_used <= self.high_watermark * self.capacity:
            return []
        target = self.low_watermark * self.capacity
        evicted = []
        for entry in sorted(self._entries.values(), key=lambda e: e.last_access):
            if self.bytes_used <= target:
                break
            if entry.readers:
                continue
            del self._entries[entry.key]
            self.bytes_used -= entry.size
            evicted.append(entry.key)
        return evicted

    def usage(self) -> dict:
        return {"bytes_used": self.bytes_used, "capacity": self.capacity,
                "object_count": len(self._entries)}
