"""Piecewise-linear orientation-preserving time reparametrizations.

A warp is stored as knot times, the value at the first knot and one exact
slope per segment; values at the other knots are derived.  Keeping slopes
as the authoritative data makes the algebra exact: composition multiplies
slopes, inversion takes reciprocals, so the slope-interval bounds hold with
zero float tolerance.  Beyond the knots the warp extends linearly with the
edge slopes, which makes every instance a bijection of the real line.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonMonotoneWarp

__all__ = ["Reparametrization", "rep_membership", "compose", "invert"]


@dataclass(frozen=True)
class Reparametrization:
    t_knots: np.ndarray
    h0: float
    slopes: np.ndarray
    h_knots: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        t = np.asarray(self.t_knots, dtype=float)
        s = np.asarray(self.slopes, dtype=float)
        if t.ndim != 1 or t.size < 2 or s.shape != (t.size - 1,):
            raise NonMonotoneWarp("need n>=2 knot times and n-1 slopes")
        if np.any(np.diff(t) <= 0):
            raise NonMonotoneWarp("knot times must increase strictly")
        if np.any(s <= 0):
            raise NonMonotoneWarp("all slopes must be strictly positive")
        object.__setattr__(self, "t_knots", t)
        object.__setattr__(self, "slopes", s)
        h = self.h0 + np.concatenate([[0.0], np.cumsum(s * np.diff(t))])
        object.__setattr__(self, "h_knots", h)

    @staticmethod
    def identity() -> "Reparametrization":
        return Reparametrization(np.array([0.0, 1.0]), 0.0, np.array([1.0]))

    @staticmethod
    def linear(slope: float, h0: float = 0.0) -> "Reparametrization":
        return Reparametrization(np.array([0.0, 1.0]), h0, np.array([float(slope)]))

    @staticmethod
    def from_knots(t, h) -> "Reparametrization":
        t = np.asarray(t, dtype=float)
        h = np.asarray(h, dtype=float)
        if np.any(np.diff(h) <= 0):
            raise NonMonotoneWarp("knot values must increase strictly")
        return Reparametrization(t, float(h[0]), np.diff(h) / np.diff(t))

    @staticmethod
    def from_monotone_samples(t, h, min_slope: float = 1e-9) -> "Reparametrization":
        """Build a warp from samples that may contain flats or tiny
        inversions (e.g. staircase alignments); values are nudged just enough
        to restore strict monotonicity."""
        t = np.asarray(t, dtype=float)
        h = np.array(h, dtype=float)
        for i in range(1, h.size):
            lo = h[i - 1] + min_slope * (t[i] - t[i - 1])
            if h[i] < lo:
                h[i] = lo
        return Reparametrization.from_knots(t, h)

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.interp(t, self.t_knots, self.h_knots)
        lo, hi = self.t_knots[0], self.t_knots[-1]
        left = t < lo
        right = t > hi
        if np.any(left):
            out = np.where(left, self.h_knots[0] + self.slopes[0] * (t - lo), out)
        if np.any(right):
            out = np.where(right, self.h_knots[-1] + self.slopes[-1] * (t - hi), out)
        return out if out.ndim else float(out)

    def slope_range(self) -> tuple[float, float]:
        return float(self.slopes.min()), float(self.slopes.max())

    def inverse_call(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        out = np.interp(u, self.h_knots, self.t_knots)
        lo, hi = self.h_knots[0], self.h_knots[-1]
        left, right = u < lo, u > hi
        if np.any(left):
            out = np.where(left, self.t_knots[0] + (u - lo) / self.slopes[0], out)
        if np.any(right):
            out = np.where(right, self.t_knots[-1] + (u - hi) / self.slopes[-1], out)
        return out if out.ndim else float(out)

    def shifted(self, dt: float, dh: float) -> "Reparametrization":
        return Reparametrization(self.t_knots + dt, self.h0 + dh, self.slopes.copy())

    def knots(self) -> list[list[float]]:
        return [[float(a), float(b)] for a, b in zip(self.t_knots, self.h_knots)]


def rep_membership(h: Reparametrization, eps: float) -> bool:
    """Strict slope-band test: h in Rep(eps) iff every chord slope lies in
    the open interval (1-eps, 1+eps).  For piecewise-linear warps chord
    slopes are convex combinations of segment slopes, so checking segments
    is exact."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    lo, hi = h.slope_range()
    return (1.0 - eps) < lo and hi < (1.0 + eps)


def compose(outer: Reparametrization, inner: Reparametrization) -> Reparametrization:
    """outer(inner(t)) with exact slope products on every composite segment."""
    cuts = inner.inverse_call(outer.t_knots)
    t = np.unique(np.concatenate([inner.t_knots, cuts]))
    mids = 0.5 * (t[:-1] + t[1:])
    seg_inner = np.clip(np.searchsorted(inner.t_knots, mids) - 1, 0, inner.slopes.size - 1)
    seg_outer = np.clip(
        np.searchsorted(outer.t_knots, inner(mids)) - 1, 0, outer.slopes.size - 1)
    slopes = outer.slopes[seg_outer] * inner.slopes[seg_inner]
    h0 = float(outer(inner(t[0])))
    return Reparametrization(t, h0, slopes)


def invert(h: Reparametrization) -> Reparametrization:
    return Reparametrization(h.h_knots.copy(), float(h.t_knots[0]), 1.0 / h.slopes)
