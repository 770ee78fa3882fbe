"""Solar filament detection: diffusion filtering, thresholding and labeling."""

from .config import PipelineConfig
from .diffusion import diffuse, normalize_image
from .labeling import label_components
from .detect import (
    DegenerateStatistics,
    EmptyDisk,
    FilamentCatalog,
    compute_threshold,
    disk_mask,
    extract_filaments,
)
from .synth import SyntheticDisk, make_disk

__all__ = [
    "PipelineConfig",
    "diffuse",
    "normalize_image",
    "label_components",
    "DegenerateStatistics",
    "EmptyDisk",
    "FilamentCatalog",
    "compute_threshold",
    "disk_mask",
    "extract_filaments",
    "SyntheticDisk",
    "make_disk",
]
