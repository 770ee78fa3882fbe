"""Intensity normalization and the explicit anisotropic diffusion filter."""

from __future__ import annotations

import numpy as np

from .config import PipelineConfig


def normalize_image(img) -> np.ndarray:
    """Map physical values linearly onto [0, 1]; a constant image maps to zeros.

    Accepts a ``FitsImage`` or any 2-D array.
    """
    values = np.asarray(getattr(img, "pixels", img), dtype=np.float64)
    lo, hi = values.min(), values.max()
    if hi == lo:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def conductance(grad_mag: np.ndarray, kappa: float, kind: str) -> np.ndarray:
    x = grad_mag / kappa
    if kind == "exp":
        return np.exp(-(x * x))
    if kind == "rational":
        return 1.0 / (1.0 + x * x)
    raise ValueError(f"unknown conduction {kind!r}")


def diffusion_step(img: np.ndarray, kappa: float, lam: float, kind: str) -> np.ndarray:
    """One explicit 4-neighbour update with edge-replicated borders."""
    p = np.pad(img, 1, mode="edge")
    flux = np.zeros_like(img)
    for neighbour in (p[:-2, 1:-1], p[2:, 1:-1], p[1:-1, 2:], p[1:-1, :-2]):
        d = neighbour - img
        flux += conductance(np.abs(d), kappa, kind) * d
    return img + lam * flux


def diffuse(img_n, cfg: PipelineConfig = PipelineConfig()) -> np.ndarray:
    out = np.array(img_n, dtype=np.float64)
    for _ in range(cfg.iterations):
        out = diffusion_step(out, cfg.kappa, cfg.lam, cfg.conduction)
    return out
