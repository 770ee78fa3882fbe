"""Solar-disk masking, threshold selection and filament extraction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import PipelineConfig
from .labeling import label_components

MAD_TO_SIGMA = 1.4826


class EmptyDisk(ValueError):
    pass


class DegenerateStatistics(ValueError):
    pass


def disk_mask(img_n, cfg: PipelineConfig = PipelineConfig()) -> np.ndarray:
    """Boolean mask of the solar disk: the largest 4-connected bright region
    with enclosed holes (dark filaments, sunspots) filled in."""
    img_n = np.asarray(img_n, dtype=np.float64)
    level = cfg.disk_frac * np.percentile(img_n, 99)
    # zero-valued pixels are never bright, even when the 99th percentile is 0
    bright = (img_n >= level) & (img_n > 0)
    labels, count = label_components(bright, connectivity=4)
    if count == 0:
        raise EmptyDisk("no pixel reaches the disk brightness level")
    areas = np.bincount(labels.ravel())
    areas[0] = 0
    disk = labels == int(np.argmax(areas))

    outside, n_out = label_components(~disk, connectivity=8)
    border = np.unique(np.concatenate(
        [outside[0], outside[-1], outside[:, 0], outside[:, -1]]))
    holes = ~disk & ~np.isin(outside, border)
    return disk | holes


def compute_threshold(diffused, mask, cfg: PipelineConfig = PipelineConfig()) -> float:
    values = np.asarray(diffused, dtype=np.float64)[np.asarray(mask, dtype=bool)]
    if values.size == 0:
        raise EmptyDisk("threshold needs at least one on-disk pixel")
    k = cfg.threshold_k
    if cfg.threshold_method == "mad":
        median = float(np.median(values))
        mad = float(np.median(np.abs(values - median)))
        if mad == 0:
            raise DegenerateStatistics("on-disk MAD is zero")
        return median - k * MAD_TO_SIGMA * mad
    mean = float(np.mean(values))
    std = float(np.std(values))
    if std == 0 or np.ptp(values) == 0:
        raise DegenerateStatistics("on-disk standard deviation is zero")
    return mean - k * std


@dataclass
class FilamentCatalog:
    entries: list[dict] = field(default_factory=list)
    label_map: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=np.int32))

    def __len__(self) -> int:
        return len(self.entries)


def component_stats(label_map: np.ndarray, intensity: np.ndarray) -> list[dict]:
    """Per-label area, centroid, bounding box and mean intensity for labels 1..K."""
    entries = []
    count = int(label_map.max()) if label_map.size else 0
    rows, cols = np.nonzero(label_map)
    labs = label_map[rows, cols]
    order = np.argsort(labs, kind="stable")
    rows, cols, labs = rows[order], cols[order], labs[order]
    bounds = np.searchsorted(labs, np.arange(1, count + 2))
    for lab in range(1, count + 1):
        lo, hi = bounds[lab - 1], bounds[lab]
        r, c = rows[lo:hi], cols[lo:hi]
        entries.append({
            "label": lab,
            "area_px": int(hi - lo),
            "centroid": [float(r.sum() / r.size), float(c.sum() / c.size)],
            "bbox": [int(r.min()), int(c.min()), int(r.max()), int(c.max())],
            "mean_intensity": float(intensity[r, c].sum() / r.size),
        })
    return entries


def extract_filaments(diffused, mask, threshold: float, cfg: PipelineConfig = PipelineConfig(),
                      intensity=None) -> FilamentCatalog:
    """Label dark on-disk regions below ``threshold``.

    ``intensity`` is the pre-diffusion normalized image used for catalog
    statistics; it defaults to ``diffused``.
    """
    diffused = np.asarray(diffused, dtype=np.float64)
    intensity = diffused if intensity is None else np.asarray(intensity, dtype=np.float64)
    candidate = (diffused < threshold) & np.asarray(mask, dtype=bool)
    labels, count = label_components(candidate, connectivity=cfg.connectivity)
    areas = np.bincount(labels.ravel(), minlength=count + 1)
    keep = areas >= cfg.min_area
    keep[0] = False
    # labels are already in raster order, so ranking survivors preserves it
    remap = np.zeros(count + 1, dtype=np.int32)
    remap[keep] = np.arange(1, int(keep.sum()) + 1, dtype=np.int32)
    label_map = remap[labels]
    return FilamentCatalog(component_stats(label_map, intensity), label_map)
