"""Numerical flow maps: fixed-step RK4 with dense output, orbit segments
and flow-box transversals.

The integrator is deliberately fixed-step (default 1e-3) so that repeated
evaluations compose bit-identically: phi(nT, x) computed in one run equals
n runs of phi(T, .) glued together, which the pseudotrajectory machinery
relies on.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import EscapedDomain, HorizonExceeded, NearSingularity, ShadowlabError
from .fields import VectorField
from .geometry import Surface

__all__ = ["Flow", "OrbitSegment", "Transversal", "build_transversal"]


@dataclass(frozen=True)
class OrbitSegment:
    """A sampled orbit arc phi([t_begin, t_end], start), times increasing."""

    start: np.ndarray
    t_begin: float
    t_end: float
    times: np.ndarray
    points: np.ndarray

    def __post_init__(self):
        if self.t_begin > self.t_end:
            raise ShadowlabError("orbit segment needs t_begin <= t_end")
        if np.any(np.diff(self.times) <= 0):
            raise ShadowlabError("orbit segment sample times must increase strictly")

    def interp(self, ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        x = np.interp(ts, self.times, self.points[:, 0])
        y = np.interp(ts, self.times, self.points[:, 1])
        return np.stack([x, y], axis=-1)


@dataclass(frozen=True)
class Flow:
    field: VectorField
    step: float = 1e-3
    group_tolerance: float = 1e-6
    max_time: float = 1000.0

    def __post_init__(self):
        if self.step <= 0:
            raise ShadowlabError("integrator step must be positive")

    @property
    def surface(self) -> Surface:
        return self.field.surface

    def _bounds_args(self):
        s = self.surface
        if s.is_torus:
            px, py = s.periods
            return True, px, py, False, 0.0, 0.0, 0.0, 0.0
        x0, x1, y0, y1 = s.bounds
        return False, 0.0, 0.0, True, x0, x1, y0, y1

    def _run(self, pts, h, n_steps, rec_every, alive=None, exit_step=None, step0=0):
        pts = np.ascontiguousarray(pts, dtype=float)
        n = pts.shape[0]
        if alive is None:
            alive = np.ones(n, dtype=np.bool_)
        if exit_step is None:
            exit_step = np.full(n, -1, dtype=np.int64)
        n_rec = n_steps // rec_every if rec_every > 0 else 0
        out = np.empty((n_rec + 1, n, 2))
        is_torus, px, py, hb, bx0, bx1, by0, by1 = self._bounds_args()
        _kernels.rk4_chunk(
            self.field.u_terms, self.field.v_terms, pts, h, n_steps,
            rec_every if rec_every > 0 else n_steps + 1,
            is_torus, px, py, hb, bx0, bx1, by0, by1, out, alive, exit_step, step0,
        )
        return pts, out, alive, exit_step

    def flow_map(self, t: float, x) -> np.ndarray:
        """phi(t, x) for a single point; raises on horizon or patch escape."""
        if abs(t) > self.max_time:
            raise HorizonExceeded(f"|t|={abs(t):.3g} exceeds max_time={self.max_time}")
        out, alive, exit_t = self.flow_map_many(t, np.asarray(x, dtype=float)[None, :])
        if not alive[0]:
            raise EscapedDomain(exit_t[0], out[0])
        return out[0]

    def flow_map_many(self, t: float, pts) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Batched endpoint map.  Escaped points freeze at their last inside
        position; returns (points, alive mask, |exit time| or nan)."""
        pts = np.array(np.atleast_2d(pts), dtype=float)
        if self.surface.is_torus:
            pts = self.surface.wrap(pts)
        h = self.step if t >= 0 else -self.step
        n_full = int(abs(t) / self.step)
        rem = abs(t) - n_full * self.step
        cur, _, alive, exit_step = self._run(pts, h, n_full, 0)
        if rem > 1e-12:
            cur, _, alive, exit_step = self._run(
                cur, np.sign(h) * rem, 1, 0, alive, exit_step, step0=n_full)
        exit_t = np.where(exit_step >= 0, np.minimum(exit_step, n_full) * self.step, np.nan)
        return cur, alive, exit_t

    def trajectory(self, x, t_span: float, rec_dt: float | None = None) -> OrbitSegment:
        """Dense orbit segment from x over [0, t_span] (or [t_span, 0] if
        t_span < 0), sampled every rec_dt (snapped to step multiples)."""
        times, recs, alive, exit_t = self.advance_batch(
            np.asarray(x, dtype=float)[None, :], t_span, rec_dt)
        pts = recs[:, 0, :]
        if not alive[0]:
            raise EscapedDomain(exit_t[0], pts[-1])
        if t_span >= 0:
            return OrbitSegment(np.asarray(x, float), 0.0, times[-1], times, pts)
        return OrbitSegment(np.asarray(x, float), times[0], 0.0, times, pts)

    def advance_batch(self, pts, t_span: float, rec_dt: float | None = None):
        """Batched dense run.  Returns (times, records, alive, exit_times)
        with records[k, i] = phi(times[k], pts[i]); times increase even for
        backward runs.  Escaped points freeze (check alive/exit_times)."""
        if rec_dt is None:
            rec_dt = 10 * self.step
        rec_every = max(1, int(round(rec_dt / self.step)))
        rec_dt = rec_every * self.step
        n_rec = max(1, int(round(abs(t_span) / rec_dt)))
        n_steps = n_rec * rec_every
        if n_steps * self.step > self.max_time:
            raise HorizonExceeded(
                f"requested span {abs(t_span):.3g} exceeds max_time={self.max_time}")
        pts = np.array(np.atleast_2d(pts), dtype=float)
        if self.surface.is_torus:
            pts = self.surface.wrap(pts)
        h = self.step if t_span >= 0 else -self.step
        _, out, alive, exit_step = self._run(pts, h, n_steps, rec_every)
        times = np.arange(n_rec + 1) * rec_dt
        exit_t = np.where(exit_step >= 0, exit_step * self.step, np.nan)
        if t_span < 0:
            times = -times[::-1]
            out = out[::-1]
        return times, out, alive, exit_t

    def reversed(self) -> "Flow":
        return Flow(self.field.reversed(), self.step, self.group_tolerance, self.max_time)

    def speed(self, pts) -> np.ndarray:
        return self.field.speed(pts)

    def describe(self) -> dict:
        return {
            "field": self.field.to_spec(),
            "integrator": "rk4-fixed",
            "step": self.step,
            "group_tolerance": self.group_tolerance,
        }


def _rot90(v: np.ndarray) -> np.ndarray:
    return np.array([-v[1], v[0]])


@dataclass(frozen=True)
class Transversal:
    """A short segment nowhere tangent to the field, through a regular point."""

    center: np.ndarray
    direction: np.ndarray          # unit vector along the segment
    half_length: float
    samples: np.ndarray
    flow_time_halfwidth: float
    surface: Surface = field(repr=False, default=None)

    @property
    def endpoints(self) -> np.ndarray:
        return np.stack([
            self.center - self.half_length * self.direction,
            self.center + self.half_length * self.direction,
        ])

    def point_at(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        p = self.center + np.multiply.outer(s, self.direction)
        return self.surface.wrap(p) if self.surface is not None else p

    def coordinate(self, pts) -> np.ndarray:
        d = self.surface.displacement(self.center, pts)
        return d @ self.direction

    def offset(self, pts) -> np.ndarray:
        """Unsigned distance from the segment's supporting line."""
        d = self.surface.displacement(self.center, pts)
        n = _rot90(self.direction)
        return d @ n


_MIN_TANGENCY_SINE = 0.1


def build_transversal(flow: Flow, x0, half_length: float, n_samples: int = 21) -> Transversal:
    """Segment through x0 perpendicular to the field, shrunk until the
    non-tangency bound holds, with a flow-time halfwidth over which the
    flowed segment images stay pairwise disjoint (sampled check)."""
    x0 = np.asarray(x0, dtype=float)
    v0 = flow.field.eval(x0)
    sp0 = float(np.hypot(*v0))
    if sp0 < 1e-6:
        raise NearSingularity(f"field magnitude {sp0:.2e} at {x0} is below 1e-6")
    direction = _rot90(v0) / sp0
    L = float(half_length)
    for _ in range(40):
        s = np.linspace(-L, L, n_samples)
        pts = x0 + s[:, None] * direction
        vel = flow.field.eval(pts)
        speed = np.sqrt((vel * vel).sum(axis=1))
        if np.any(speed < 1e-9):
            L *= 0.6
            continue
        cross = np.abs(direction[0] * vel[:, 1] - direction[1] * vel[:, 0])
        if np.all(cross / speed >= _MIN_TANGENCY_SINE):
            break
        L *= 0.6
    else:
        raise NearSingularity(f"no transversal at {x0}: tangency persists")
    samples = flow.surface.wrap(x0 + np.linspace(-L, L, n_samples)[:, None] * direction)

    # Disjointness of the flowed images, checked on a (time x sample) lattice:
    # trajectories of distinct samples must stay separated by a fraction of
    # their initial spacing over |t| <= tau.
    tau = min(1.0, L / max(speed.max(), 1e-9))
    spacing = 2 * L / (n_samples - 1)
    for _ in range(12):
        ok = True
        for sgn in (1.0, -1.0):
            _, recs, alive, _ = flow.advance_batch(
                samples, sgn * tau, rec_dt=max(tau / 4, flow.step))
            if not np.all(alive):
                ok = False
                break
            for a in range(n_samples):
                for b in range(a + 1, n_samples):
                    d = flow.surface.dist(recs[:, a, :], recs[:, b, :]).min()
                    if d < 0.05 * spacing:
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                break
        if ok:
            break
        tau *= 0.5
    return Transversal(x0, direction, L, samples, tau, flow.surface)
