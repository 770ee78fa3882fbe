from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

DEFAULT_K = {"mad": 3.0, "sigma": 2.5}


@dataclass(frozen=True)
class PipelineConfig:
    kappa: float = 0.1
    lam: float = 0.20
    iterations: int = 10
    conduction: str = "exp"
    threshold_method: str = "mad"
    k: Optional[float] = None
    disk_frac: float = 0.15
    min_area: int = 50
    connectivity: int = 8

    def __post_init__(self):
        if not 0 < self.lam <= 0.25:
            raise ValueError(f"lam must be in (0, 0.25], got {self.lam}")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.conduction not in ("exp", "rational"):
            raise ValueError(f"unknown conduction {self.conduction!r}")
        if self.threshold_method not in DEFAULT_K:
            raise ValueError(f"unknown threshold method {self.threshold_method!r}")
        if not 0 < self.disk_frac < 1:
            raise ValueError("disk_frac must be in (0, 1)")
        if self.min_area < 1:
            raise ValueError("min_area must be >= 1")
        if self.connectivity != 8:
            raise ValueError("filament labeling uses 8-connectivity")

    @property
    def threshold_k(self) -> float:
        return DEFAULT_K[self.threshold_method] if self.k is None else float(self.k)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["k"] = self.threshold_k
        return out
