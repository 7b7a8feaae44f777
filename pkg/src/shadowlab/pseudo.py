"""Pseudotrajectories: anchor-based orbit gluings, their validators, the
random-kick generator and the shadowing configuration (eps0, T0, core
region) they are verified against.

A pseudotrajectory is stored as its anchors xi(n*T0) over a finite index
window; between anchors it follows the true flow, so all jumps sit on the
anchor grid.  Because the integrator is fixed-step and T0 is a step
multiple, re-sampling a true orbit into anchors reproduces the orbit
bit-identically and gluing seams carry exactly the intended jump.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .elements import CriticalElement, element_distance
from .errors import ConfigError, EscapedDomain, GluingError
from .flow import Flow

__all__ = [
    "Pseudotrajectory",
    "SampledCurve",
    "ValidationReport",
    "validate_pseudotrajectory",
    "jump_size",
    "make_glued",
    "random_pseudotrajectory",
    "ShadowingConfig",
    "derive_config",
]

CLAMP = "clamp"
PERIODIC = "periodic"
_EXT_NAMES = {CLAMP: "ClampEnds", PERIODIC: "PeriodicAnchors"}
_EXT_FROM_NAME = {v: k for k, v in _EXT_NAMES.items()} | {k: k for k in _EXT_NAMES}


@dataclass
class Pseudotrajectory:
    flow: Flow
    T0: float
    n_min: int
    anchors: np.ndarray                  # (n_anchors, 2), anchors[k] = xi((n_min+k) T0)
    extension: str = CLAMP
    _arc_cache: np.ndarray | None = field(default=None, repr=False, compare=False)
    _arc_times: np.ndarray | None = field(default=None, repr=False, compare=False)
    _end_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.anchors = np.atleast_2d(np.asarray(self.anchors, dtype=float))
        if self.anchors.shape[0] < 1:
            raise GluingError("anchor window must be non-empty")
        if self.extension not in (CLAMP, PERIODIC):
            raise GluingError(f"unknown extension rule {self.extension!r}")
        if self.T0 <= 0:
            raise GluingError("T0 must be positive")
        self.anchors = self.flow.surface.wrap(self.anchors)

    # -- window bookkeeping ------------------------------------------------
    @property
    def n_anchors(self) -> int:
        return self.anchors.shape[0]

    @property
    def n_max(self) -> int:
        return self.n_min + self.n_anchors - 1

    @property
    def window(self) -> tuple[float, float]:
        return (self.n_min * self.T0, self.n_max * self.T0)

    def anchor_times(self) -> np.ndarray:
        return (self.n_min + np.arange(self.n_anchors)) * self.T0

    # -- evaluation ---------------------------------------------------------
    def _arcs(self) -> tuple[np.ndarray, np.ndarray]:
        if self._arc_cache is None:
            # T0/40 keeps the cache aligned with the 0.05/0.025-grids the
            # validators and the alignment DP sample on, so those reads are
            # exact records rather than interpolants.
            rec_dt = max(self.flow.step, self.T0 / 40)
            ts, recs, _, _ = self.flow.advance_batch(self.anchors, self.T0, rec_dt=rec_dt)
            self._arc_times = ts
            self._arc_cache = recs       # (n_rec+1, n_anchors, 2)
        return self._arc_times, self._arc_cache

    def _end_orbit(self, side: str, span: float) -> "SampledCurve":
        span = float(np.ceil(abs(span)) + self.T0)
        key = (side, span)
        if key not in self._end_cache:
            idx = 0 if side == "lo" else -1
            sgn = -1.0 if side == "lo" else 1.0
            ts, recs, _, _ = self.flow.advance_batch(
                self.anchors[idx][None, :], sgn * span,
                rec_dt=max(self.flow.step, self.T0 / 40))
            base = self.n_min * self.T0 if side == "lo" else self.n_max * self.T0
            self._end_cache[key] = SampledCurve(ts + base, recs[:, 0, :], self.flow)
        return self._end_cache[key]

    def eval(self, times) -> np.ndarray:
        """xi at arbitrary times (dense-output interpolation of the arcs)."""
        t = np.atleast_1d(np.asarray(times, dtype=float))
        out = np.empty((t.size, 2))
        n = np.floor(t / self.T0 + 1e-9).astype(np.int64)
        if self.extension == PERIODIC:
            k = (n - self.n_min) % self.n_anchors
            offs = t - n * self.T0
            self._fill_from_arcs(out, np.arange(t.size), k, offs)
        else:
            lo_mask = n < self.n_min
            hi_mask = n > self.n_max
            mid = ~(lo_mask | hi_mask)
            if np.any(mid):
                k = n[mid] - self.n_min
                offs = t[mid] - n[mid] * self.T0
                self._fill_from_arcs(out, np.flatnonzero(mid), k, offs)
            if np.any(lo_mask):
                span = self.n_min * self.T0 - t[lo_mask].min()
                out[lo_mask] = self._end_orbit("lo", span).eval(t[lo_mask])
            if np.any(hi_mask):
                span = t[hi_mask].max() - self.n_max * self.T0
                out[hi_mask] = self._end_orbit("hi", span).eval(t[hi_mask])
        return out if np.ndim(times) else out[0]

    def _fill_from_arcs(self, out, rows, k, offs):
        ts, arcs = self._arcs()
        for kk in np.unique(k):
            sel = k == kk
            r = rows[sel]
            out[r, 0] = np.interp(offs[sel], ts, arcs[:, kk, 0])
            out[r, 1] = np.interp(offs[sel], ts, arcs[:, kk, 1])
        # torus arcs may wrap mid-arc; interpolation across the seam is
        # handled by re-evaluating suspect rows from the anchor directly
        if self.flow.surface.is_torus:
            px, py = self.flow.surface.periods
            bad = np.zeros(rows.size, dtype=bool)
            for kk in np.unique(k):
                sel = k == kk
                jx = np.abs(np.diff(arcs[:, kk, 0])).max() > px / 2
                jy = np.abs(np.diff(arcs[:, kk, 1])).max() > py / 2
                if jx or jy:
                    bad[sel] = True
            if np.any(bad):
                r = rows[bad]
                pts = self.anchors[k[bad]]
                for i, (p, o) in enumerate(zip(pts, offs[bad])):
                    out[r[i]] = self.flow.flow_map(float(o), p)

    # -- serialization -------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "T0": self.T0,
            "anchors": [[int(self.n_min + k), float(a[0]), float(a[1])]
                        for k, a in enumerate(self.anchors)],
            "extension_rule": _EXT_NAMES[self.extension],
            "field": self.flow.field.to_spec(),
        }

    @staticmethod
    def from_json(data: dict, flow: Flow | None = None) -> "Pseudotrajectory":
        if flow is None:
            from .fields import VectorField
            flow = Flow(VectorField.from_spec(data["field"]))
        rows = sorted(data["anchors"], key=lambda r: r[0])
        ns = [int(r[0]) for r in rows]
        if ns != list(range(ns[0], ns[0] + len(ns))):
            raise GluingError("anchor indices must be contiguous")
        anchors = np.array([[r[1], r[2]] for r in rows], dtype=float)
        return Pseudotrajectory(flow, float(data["T0"]), ns[0], anchors,
                                _EXT_FROM_NAME[data["extension_rule"]])


@dataclass(frozen=True)
class SampledCurve:
    """A plain sampled curve (for validation of non-anchor inputs)."""

    times: np.ndarray
    points: np.ndarray
    flow: Flow

    @property
    def window(self) -> tuple[float, float]:
        return (float(self.times[0]), float(self.times[-1]))

    def eval(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        x = np.interp(ts, self.times, self.points[:, 0])
        y = np.interp(ts, self.times, self.points[:, 1])
        return np.stack([x, y], axis=-1)


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    d: float
    max_violation: float
    witness_t: float
    witness_s: float

    def describe(self) -> dict:
        return {
            "valid": self.valid,
            "d": self.d,
            "max_violation": self.max_violation,
            "witness": {"t": self.witness_t, "s": self.witness_s},
        }


def validate_pseudotrajectory(xi, d: float, horizon: tuple[float, float] | None = None,
                              t_step: float = 0.1, s_step: float = 0.05) -> ValidationReport:
    """Continuous d-pseudotrajectory check on a (t, s) grid.

    Verifies dist(xi(t+s), phi(s, xi(t))) < d for t on a t_step grid over
    the horizon and s in [0, 1] on an s_step grid; reports the largest
    deviation and where it happens (never raises).
    """
    if d <= 0:
        raise ValueError("d must be positive")
    flow = xi.flow
    lo, hi = horizon if horizon is not None else xi.window
    ts = np.arange(lo, hi + 1e-9, t_step)
    base = np.atleast_2d(xi.eval(ts))
    s_times, recs, _, _ = flow.advance_batch(base, 1.0, rec_dt=s_step)
    worst = -1.0
    wt = ws = 0.0
    for k, s in enumerate(s_times):
        target = np.atleast_2d(xi.eval(ts + s))
        dev = flow.surface.dist(recs[k], target)
        i = int(np.argmax(dev))
        if dev[i] > worst:
            worst = float(dev[i])
            wt, ws = float(ts[i]), float(s)
    return ValidationReport(worst < d, d, worst, wt, ws)


def jump_size(xi: Pseudotrajectory) -> float:
    """max_n dist(phi(T0, xi(n T0)), xi((n+1) T0)); the Pt_T0(d) membership
    quantity (strict < d)."""
    ends, _, _ = xi.flow.flow_map_many(xi.T0, xi.anchors)
    nxt = xi.anchors[1:]
    gaps = xi.flow.surface.dist(ends[:-1], nxt)
    worst = float(gaps.max()) if gaps.size else 0.0
    if xi.extension == PERIODIC:
        worst = max(worst, float(xi.flow.surface.dist(ends[-1], xi.anchors[0])))
    return worst


def make_glued(flow: Flow, segments: list[tuple], T0: float,
               extension: str = CLAMP) -> Pseudotrajectory:
    """Glue orbit arcs into a pseudotrajectory.

    Each segment is (start_point, (t_a, t_b)) meaning xi(t) = phi(t - t_a,
    start_point) on [t_a, t_b); consecutive intervals must tile a window and
    all interval ends must sit on the T0 anchor grid, so jumps happen only
    at the switch times.
    """
    if not segments:
        raise GluingError("need at least one segment")

    def on_grid(t):
        k = round(t / T0)
        if abs(t - k * T0) > 1e-9:
            raise GluingError(f"switch time {t} is not on the T0={T0} anchor grid")
        return k

    spans = []
    for pt, (a, b) in segments:
        if b <= a:
            raise GluingError("segment interval must have positive length")
        spans.append((on_grid(a), on_grid(b), np.asarray(pt, dtype=float)))
    for (a0, b0, _), (a1, _, _) in zip(spans, spans[1:]):
        if a1 != b0:
            raise GluingError("segment intervals must tile the window without gaps")
    n_min, n_max = spans[0][0], spans[-1][1]
    anchors = np.empty((n_max - n_min + 1, 2))
    for ka, kb, pt in spans:
        n_arc = kb - ka + 1
        _, recs, alive, exit_t = flow.advance_batch(pt[None, :], (n_arc - 1) * T0 + T0, rec_dt=T0)
        if not alive[0] and exit_t[0] < (n_arc - 1) * T0:
            raise EscapedDomain(exit_t[0], recs[-1, 0])
        anchors[ka - n_min:kb - n_min + 1] = recs[:n_arc, 0, :]
    if extension == PERIODIC:
        # the window is one period [a, b): the anchor at b wraps to a
        anchors = anchors[:-1]
    return Pseudotrajectory(flow, T0, n_min, anchors, extension)


def random_pseudotrajectory(flow: Flow, d: float, T0: float, n_anchors: int,
                            start, rng: np.random.Generator,
                            kick_scale: float = 0.98, n_min: int = 0) -> Pseudotrajectory:
    """Pt_T0(d) sample: true arcs of length T0 with independent kicks drawn
    uniformly from the disk of radius kick_scale*d at every anchor."""
    anchors = np.empty((n_anchors, 2))
    anchors[0] = flow.surface.wrap(np.asarray(start, dtype=float))
    for k in range(1, n_anchors):
        nxt, alive, exit_t = flow.flow_map_many(T0, anchors[k - 1][None, :])
        if not alive[0]:
            raise EscapedDomain(exit_t[0], nxt[0])
        r = kick_scale * d * np.sqrt(rng.uniform())
        th = rng.uniform(0, 2 * np.pi)
        p = nxt[0] + r * np.array([np.cos(th), np.sin(th)])
        if not flow.surface.is_torus:
            x0, x1, y0, y1 = flow.surface.bounds
            p = np.clip(p, [x0, y0], [x1, y1])
        anchors[k] = flow.surface.wrap(p)
    return Pseudotrajectory(flow, T0, n_min, anchors, CLAMP)


# --------------------------------------------------------------------------
# Shadowing configuration: eps0, T0 and the core region K~.


@dataclass(frozen=True)
class ShadowingConfig:
    eps0: float
    T0: float
    trap_set_margin: float
    singularities: np.ndarray            # (k, 2)
    closed_orbits: tuple = ()
    field_name: str | None = None

    def describe(self) -> dict:
        return {
            "eps0": self.eps0,
            "T0": self.T0,
            "trap_set_margin": self.trap_set_margin,
            "singularities": [[float(x), float(y)] for x, y in self.singularities],
            "n_closed_orbits": len(self.closed_orbits),
            "field": self.field_name,
        }

    def in_core_region(self, flow: Flow, pts: np.ndarray) -> np.ndarray:
        """K~ membership: the whole +-2T0 flow trace stays out of the
        eps0/2 balls around the singularities (with the trap margin)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.singularities.size == 0:
            return np.ones(pts.shape[0], dtype=bool)
        ok = np.ones(pts.shape[0], dtype=bool)
        floor = self.eps0 / 2 + self.trap_set_margin
        for sgn in (1.0, -1.0):
            _, recs, alive, _ = flow.advance_batch(
                pts, sgn * 2 * self.T0, rec_dt=max(flow.step, self.T0 / 8))
            ok &= alive
            d = flow.surface.dist(recs[:, :, None, :],
                                  self.singularities[None, None, :, :])
            ok &= d.min(axis=(0, 2)) > floor
        return ok


def _region_grid(flow: Flow, n: int) -> np.ndarray:
    s = flow.surface
    if s.is_torus:
        px, py = s.periods
        gx = np.linspace(0, px, n, endpoint=False)
        gy = np.linspace(0, py, n, endpoint=False)
    else:
        x0, x1, y0, y1 = s.bounds
        # sample the working core of the patch, not the absorbing fringe
        cx = min(2.5, (x1 - x0) / 2 * 0.4)
        cy = min(2.5, (y1 - y0) / 2 * 0.4)
        gx = np.linspace(-cx, cx, n)
        gy = np.linspace(-cy, cy, n)
    X, Y = np.meshgrid(gx, gy)
    return np.stack([X.ravel(), Y.ravel()], axis=1)


def _no_return_ok(flow: Flow, pts: np.ndarray, T0: float) -> bool:
    """phi(t, x) != x for t in (0, 2 T0] on the sampled set: after the
    displacement rises it must never dip back under a quarter of its
    running max (a grid-safe proxy for a genuine return)."""
    if pts.shape[0] == 0:
        return True
    _, recs, alive, _ = flow.advance_batch(pts, 2 * T0, rec_dt=max(flow.step, T0 / 20))
    pts_ok = pts[alive]
    recs = recs[:, alive, :]
    disp = flow.surface.dist(recs[1:], pts_ok[None, :, :])
    runmax = np.maximum.accumulate(disp, axis=0)
    dips = disp < 0.25 * runmax
    risen = runmax > 1e-6
    return not np.any(dips & risen)


def derive_config(flow: Flow, elements: list[CriticalElement], cap: float = 0.79,
                  grid_n: int = 13, margin_frac: float = 0.02) -> ShadowingConfig:
    """eps0 from the pairwise element separation (capped below 4/5) and the
    largest T0 <= 1 whose doubled interval is return-free on the sampled
    complement of the eps0/2 singularity balls, with every closed orbit's
    eps0 collar inside the core region."""
    if not elements:
        raise ConfigError("need at least one critical element")
    min_pair = np.inf
    for i, a in enumerate(elements):
        for b in elements[i + 1:]:
            min_pair = min(min_pair, element_distance(flow.surface, a, b))
    if min_pair < 10 * flow.step:
        raise ConfigError(
            f"critical elements are {min_pair:.2e} apart; cannot separate at "
            f"step {flow.step:g}")
    eps0 = cap if not np.isfinite(min_pair) else min(cap, (1 / 3 - 1e-3) * min_pair)

    sings = np.array([e.point for e in elements if e.is_singularity], dtype=float)
    sings = sings.reshape(-1, 2)
    orbits = [e for e in elements if not e.is_singularity]

    grid = _region_grid(flow, grid_n)
    if sings.size:
        dmin = flow.surface.dist(grid[:, None, :], sings[None, :, :]).min(axis=1)
        grid = grid[dmin > eps0 / 2]

    margin = margin_frac * eps0
    T0 = 1.0
    while T0 >= 20 * flow.step:
        if _no_return_ok(flow, grid, T0):
            cfg = ShadowingConfig(eps0, T0, margin, sings,
                                  tuple(o.polyline for o in orbits),
                                  flow.field.name)
            collars_ok = True
            for o in orbits:
                poly = o.polyline[:: max(1, o.polyline.shape[0] // 60)]
                tang = np.diff(np.vstack([poly, poly[:1]]), axis=0)
                nrm = np.stack([-tang[:, 1], tang[:, 0]], axis=1)
                nrm /= np.linalg.norm(nrm, axis=1, keepdims=True) + 1e-30
                probes = [poly]
                for f in (0.5, 0.95):
                    probes += [poly + f * eps0 * nrm, poly - f * eps0 * nrm]
                probes = flow.surface.wrap(np.concatenate(probes))
                if not np.all(cfg.in_core_region(flow, probes)):
                    collars_ok = False
                    break
            if collars_ok:
                return cfg
        T0 /= 2
    raise ConfigError("no admissible T0 above 20 integrator steps")
