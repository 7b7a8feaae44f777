"""Critical elements: singularities and closed orbits.

Lives in its own module because both the pseudotrajectory configuration
and the critical-element analysis need the type.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Surface

__all__ = ["CriticalElement", "element_distance"]

SINGULARITY = "singularity"
CLOSED_ORBIT = "closed_orbit"


@dataclass(frozen=True)
class CriticalElement:
    kind: str
    point: np.ndarray | None = None          # singularity location
    polyline: np.ndarray | None = None       # closed-orbit samples (n, 2)
    period: float | None = None
    stability: str | None = None             # stable / unstable / semistable / verdict name
    label: str | None = None
    extra: dict = field(default_factory=dict, compare=False)

    @staticmethod
    def singularity(point, stability: str | None = None, label: str | None = None):
        return CriticalElement(SINGULARITY, point=np.asarray(point, dtype=float),
                               stability=stability, label=label)

    @staticmethod
    def closed_orbit(polyline, period: float, stability: str | None = None,
                     label: str | None = None):
        return CriticalElement(CLOSED_ORBIT, polyline=np.asarray(polyline, dtype=float),
                               period=float(period), stability=stability, label=label)

    @property
    def is_singularity(self) -> bool:
        return self.kind == SINGULARITY

    def samples(self) -> np.ndarray:
        return self.point[None, :] if self.is_singularity else self.polyline

    def representative(self) -> np.ndarray:
        return self.point if self.is_singularity else self.polyline[0]

    def dist_to(self, surface: Surface, pts: np.ndarray) -> np.ndarray:
        return surface.dist_to_polyline(pts, self.samples())

    def with_stability(self, stability: str) -> "CriticalElement":
        return CriticalElement(self.kind, self.point, self.polyline, self.period,
                               stability, self.label, self.extra)

    def describe(self) -> dict:
        d: dict = {"kind": self.kind, "stability": self.stability, "label": self.label}
        if self.is_singularity:
            d["point"] = [float(self.point[0]), float(self.point[1])]
        else:
            d["period"] = self.period
            d["seed"] = [float(self.polyline[0, 0]), float(self.polyline[0, 1])]
        return d


def element_distance(surface: Surface, a: CriticalElement, b: CriticalElement) -> float:
    da = a.samples()
    db = b.samples()
    d = surface.dist(da[:, None, :], db[None, :, :])
    return float(d.min())
