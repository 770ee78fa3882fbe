"""Connected-component labeling over row runs with union-find.

Each row is reduced to runs of foreground pixels; runs in adjacent rows that
touch (sharing a column for 4-connectivity, or within one column for
8-connectivity) are merged. Labels are numbered 1..K in raster order of each
component's first pixel.
"""

from __future__ import annotations

import numpy as np


def _row_runs(row: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    padded = np.concatenate(([False], row, [False]))
    edges = np.flatnonzero(padded[1:] != padded[:-1])
    return edges[0::2], edges[1::2]  # start inclusive, end exclusive


class _UnionFind:
    def __init__(self):
        self.parent: list[int] = []

    def add(self) -> int:
        self.parent.append(len(self.parent))
        return len(self.parent) - 1

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # keep the earlier run as root so roots follow raster order
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


def label_components(mask, connectivity: int = 8) -> tuple[np.ndarray, int]:
    """Label the connected foreground components of a 2-D boolean mask.

    Returns ``(labels, count)`` with ``labels`` an int32 array, 0 = background.
    """
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8")
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise ValueError("mask must be 2-D")
    reach = 1 if connectivity == 8 else 0

    uf = _UnionFind()
    runs: list[tuple[int, int, int]] = []  # (row, start, end)
    prev: list[tuple[int, int, int]] = []  # (start, end, run id) of the previous row
    for r in range(mask.shape[0]):
        starts, ends = _row_runs(mask[r])
        cur = []
        j = 0
        for s, e in zip(starts.tolist(), ends.tolist()):
            rid = uf.add()
            runs.append((r, s, e))
            # skip previous-row runs that end too far left to touch this one
            while j < len(prev) and prev[j][1] + reach <= s:
                j += 1
            k = j
            while k < len(prev) and prev[k][0] < e + reach:
                uf.union(prev[k][2], rid)
                k += 1
            cur.append((s, e, rid))
        prev = cur

    labels = np.zeros(mask.shape, dtype=np.int32)
    final: dict[int, int] = {}
    for rid, (r, s, e) in enumerate(runs):
        root = uf.find(rid)
        lab = final.get(root)
        if lab is None:
            lab = final[root] = len(final) + 1
        labels[r, s:e] = lab
    return labels, len(final)
