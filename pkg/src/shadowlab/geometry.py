"""Surfaces (plane patches and flat tori) and their metrics.

Points are float arrays of shape ``(..., 2)``.  The plane patch is an
absorbing rectangle: orbits that leave it are reported, never wrapped.
The flat torus identifies opposite edges of a ``periods`` rectangle and
uses the quotient (minimum-image) metric.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SurfaceError

__all__ = ["Surface"]

PLANE = "plane"
TORUS = "torus"


@dataclass(frozen=True)
class Surface:
    kind: str
    bounds: tuple[float, float, float, float] | None = None
    periods: tuple[float, float] | None = None

    def __post_init__(self):
        if self.kind == PLANE:
            if self.bounds is None:
                raise SurfaceError("plane patch needs bounds")
            x0, x1, y0, y1 = self.bounds
            if not (x1 > x0 and y1 > y0):
                raise SurfaceError("plane patch bounds must have positive area")
        elif self.kind == TORUS:
            if self.periods is None:
                raise SurfaceError("flat torus needs periods")
            px, py = self.periods
            if not (px > 0 and py > 0):
                raise SurfaceError("torus periods must be strictly positive")
        else:
            raise SurfaceError(f"unknown surface kind {self.kind!r}")

    @staticmethod
    def plane(half_width: float = 6.0) -> "Surface":
        w = float(half_width)
        return Surface(PLANE, bounds=(-w, w, -w, w))

    @staticmethod
    def plane_rect(x0: float, x1: float, y0: float, y1: float) -> "Surface":
        return Surface(PLANE, bounds=(float(x0), float(x1), float(y0), float(y1)))

    @staticmethod
    def torus(period_x: float = 2 * np.pi, period_y: float = 2 * np.pi) -> "Surface":
        return Surface(TORUS, periods=(float(period_x), float(period_y)))

    @property
    def is_torus(self) -> bool:
        return self.kind == TORUS

    def wrap(self, pts: np.ndarray) -> np.ndarray:
        """Map points into the fundamental domain [0,px) x [0,py) (torus only)."""
        pts = np.asarray(pts, dtype=float)
        if not self.is_torus:
            return pts
        px, py = self.periods
        out = pts.copy()
        out[..., 0] %= px
        out[..., 1] %= py
        return out

    def displacement(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Shortest vector from ``a`` to ``b`` (minimum image on the torus)."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        d = b - a
        if self.is_torus:
            px, py = self.periods
            d = d.copy()
            d[..., 0] -= px * np.round(d[..., 0] / px)
            d[..., 1] -= py * np.round(d[..., 1] / py)
        return d

    def dist(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        d = self.displacement(a, b)
        return np.sqrt(np.sum(d * d, axis=-1))

    def contains(self, pts: np.ndarray) -> np.ndarray:
        """Boolean mask of points inside the patch (always True on the torus)."""
        pts = np.asarray(pts, dtype=float)
        if self.is_torus:
            return np.ones(pts.shape[:-1], dtype=bool)
        x0, x1, y0, y1 = self.bounds
        x, y = pts[..., 0], pts[..., 1]
        return (x >= x0) & (x <= x1) & (y >= y0) & (y <= y1)

    def dist_to_polyline(self, pts: np.ndarray, poly: np.ndarray) -> np.ndarray:
        """Distance from each point to the closest sample of a polyline."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        poly = np.atleast_2d(np.asarray(poly, dtype=float))
        d = self.dist(pts[:, None, :], poly[None, :, :])
        out = d.min(axis=1)
        return out if out.size > 1 else out[0]

    def hausdorff(self, a: np.ndarray, b: np.ndarray) -> float:
        """Symmetric Hausdorff distance between two sampled curves."""
        a = np.atleast_2d(np.asarray(a, dtype=float))
        b = np.atleast_2d(np.asarray(b, dtype=float))
        d = self.dist(a[:, None, :], b[None, :, :])
        return float(max(d.min(axis=1).max(), d.min(axis=0).max()))

    def describe(self) -> dict:
        """Metric metadata embedded in output artifacts."""
        if self.is_torus:
            return {"kind": self.kind, "periods": list(self.periods), "metric": "flat quotient"}
        return {"kind": self.kind, "bounds": list(self.bounds), "metric": "euclidean"}

    @staticmethod
    def from_dict(d: dict) -> "Surface":
        if d["kind"] == TORUS:
            px, py = d["periods"]
            return Surface.torus(px, py)
        x0, x1, y0, y1 = d["bounds"]
        return Surface.plane_rect(x0, x1, y0, y1)
