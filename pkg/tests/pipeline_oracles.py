"""Slow, obviously-correct reference implementations for pipeline tests."""
import math
from collections import deque


def diffusion_step_loops(img, kappa, lam, kind="exp"):
    """Pixel-by-pixel evaluation of one explicit update with clamped borders."""
    rows, cols = len(img), len(img[0])

    def at(r, c):
        return img[min(max(r, 0), rows - 1)][min(max(c, 0), cols - 1)]

    def g(x):
        return math.exp(-(x / kappa) ** 2) if kind == "exp" else 1.0 / (1.0 + (x / kappa) ** 2)

    out = []
    for r in range(rows):
        row = []
        for c in range(cols):
            centre = img[r][c]
            total = 0.0
            for dr, dc in ((-1, 0), (1, 0), (0, 1), (0, -1)):
                d = at(r + dr, c + dc) - centre
                total += g(abs(d)) * d
            row.append(centre + lam * total)
        out.append(row)
    return out


def flood_fill_components(mask, connectivity=8):
    """Set of frozensets of (r, c) for each connected component, by BFS."""
    rows, cols = len(mask), len(mask[0])
    if connectivity == 8:
        steps = [(dr, dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1) if dr or dc]
    else:
        steps = [(-1, 0), (1, 0), (0, -1), (0, 1)]
    seen = set()
    comps = set()
    for r in range(rows):
        for c in range(cols):
            if not mask[r][c] or (r, c) in seen:
                continue
            comp = {(r, c)}
            seen.add((r, c))
            queue = deque([(r, c)])
            while queue:
                y, x = queue.popleft()
                for dy, dx in steps:
                    ny, nx = y + dy, x + dx
                    if 0 <= ny < rows and 0 <= nx < cols and mask[ny][nx] and (ny, nx) not in seen:
                        seen.add((ny, nx))
                        comp.add((ny, nx))
                        queue.append((ny, nx))
            comps.add(frozenset(comp))
    return comps


def components_of(labels, count):
    comps = {}
    for r, row in enumerate(labels):
        for c, v in enumerate(row):
            if v:
                comps.setdefault(int(v), set()).add((r, c))
    assert sorted(comps) == list(range(1, count + 1))
    return {frozenset(s) for s in comps.values()}
