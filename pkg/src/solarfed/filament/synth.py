"""Synthetic full-disk images with implanted filaments of known extent."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..fits import Card, FitsImage


@dataclass
class SyntheticDisk:
    image: np.ndarray
    disk: np.ndarray
    filaments: list[np.ndarray]

    @property
    def areas(self) -> list[int]:
        return [int(f.sum()) for f in self.filaments]


def make_disk(size: int = 256, radius: float = 100.0, n_filaments: int = 3, noise: float = 0.0,
              seed: int = 0, limb_darkening: float = 0.5, background: float = 0.02,
              filament_level: float = 0.25) -> SyntheticDisk:
    """Limb-darkened disk with ``n_filaments`` dark, elongated, non-touching blobs.

    ``noise`` is the standard deviation of additive Gaussian noise, relative
    to the disk-centre intensity of 1.
    """
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    cy = cx = (size - 1) / 2.0
    r2 = ((yy - cy) ** 2 + (xx - cx) ** 2) / radius**2
    disk = r2 <= 1.0
    mu = np.sqrt(np.clip(1.0 - r2, 0.0, 1.0))
    image = np.where(disk, 1.0 - limb_darkening * (1.0 - mu), background)

    filaments: list[np.ndarray] = []
    occupied = np.zeros_like(disk)
    attempts = 0
    while len(filaments) < n_filaments:
        attempts += 1
        if attempts > 1000:
            raise RuntimeError("could not place filaments; disk too small")
        rho = radius * 0.6 * np.sqrt(rng.uniform())
        phi = rng.uniform(0, 2 * np.pi)
        fy, fx = cy + rho * np.sin(phi), cx + rho * np.cos(phi)
        a, b = rng.uniform(12, 20), rng.uniform(3, 5)
        theta = rng.uniform(0, np.pi)
        u = (xx - fx) * np.cos(theta) + (yy - fy) * np.sin(theta)
        v = -(xx - fx) * np.sin(theta) + (yy - fy) * np.cos(theta)
        blob = (u / a) ** 2 + (v / b) ** 2 <= 1.0
        halo = (u / (a + 4)) ** 2 + (v / (b + 4)) ** 2 <= 1.0
        if (halo & occupied).any() or not (blob <= disk).all():
            continue
        occupied |= halo
        filaments.append(blob)
        image[blob] = filament_level

    if noise > 0:
        image = image + rng.normal(0.0, noise, image.shape)
    return SyntheticDisk(image, disk, filaments)


def synthetic_fits(disk: SyntheticDisk) -> FitsImage:
    cards = [Card("OBJECT", "synthetic sun"), Card("NFILAM", len(disk.filaments))]
    return FitsImage.from_array(disk.image, cards)
