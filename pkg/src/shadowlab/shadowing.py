"""Shadowing verifiers: minimax monotone-alignment searches.

Oriented mode optimizes over all monotone staircase paths on the
(xi-time x orbit-time) lattice: paths start with the candidate point
matched to the window start, may move right/up/diagonal, end anywhere on
the last row, and cost the maximum point distance over every visited
cell.  Standard(eps) mode restricts the same staircases to a slope band:
the column advance over every block of ``block_rows`` rows must keep the
averaged warp slope strictly inside (1-eps, 1+eps).  Both searches are
grid-relative: a failure certificate is sound on its grid, a success
certificate converges under refinement, and every result reports the
budget it was obtained with.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import _kernels
from .errors import BudgetExceeded, ConfigError, LeftCoreRegion, UpgradeError
from .flow import Flow
from .pseudo import Pseudotrajectory, ShadowingConfig, random_pseudotrajectory
from .reparam import Reparametrization, rep_membership

__all__ = [
    "SearchConfig",
    "ShadowingResult",
    "verify_shadowing",
    "UpgradeOutcome",
    "upgrade_to_standard",
    "threshold_curve",
    "ORIENTED",
    "STANDARD",
]

ORIENTED = "oriented"
STANDARD = "standard"


@dataclass
class SearchConfig:
    """Budget of the shadowing search; every knob is reported in the result."""

    grid_n: int = 21
    radius: float | None = None          # candidate ball radius (default 2*eps)
    dp_dt: float | None = None           # row spacing (default T0/20)
    cols_per_row: int | None = None      # orbit columns per row step (auto)
    block_rows: int = 5                  # slope-band window, in rows
    span_factor: float = 1.6             # oriented candidate-orbit span / window
    refine_rounds: int = 2
    refine_zoom: float = 5.0
    cell_budget: float = 6e9
    want_warp: bool = True
    decision_only: bool = False

    def resolved_radius(self, eps: float) -> float:
        return self.radius if self.radius is not None else 2.0 * eps


@dataclass(frozen=True)
class ShadowingResult:
    mode: str
    eps: float
    sup_dist: float
    best_point: np.ndarray
    warp: Reparametrization | None
    search_stats: dict

    @property
    def shadowed(self) -> bool:
        return self.sup_dist < self.eps

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "eps": self.eps,
            "sup_dist": self.sup_dist,
            "shadowed": bool(self.shadowed),
            "point": [float(self.best_point[0]), float(self.best_point[1])],
            "warp_knots": self.warp.knots() if self.warp is not None else None,
            "budget": self.search_stats,
        }


def _snap_dt(flow: Flow, dt: float) -> tuple[float, int]:
    k = max(1, int(round(dt / flow.step)))
    return k * flow.step, k


def _pick_rho(dt_steps: int, w: int, eps: float) -> int:
    divisors = [r for r in range(1, min(dt_steps, 64) + 1) if dt_steps % r == 0]
    for r in divisors:
        if w * r * eps >= 2.5:
            return r
    return divisors[-1]


def _band(wb: int, rho: int, eps: float) -> tuple[int, int]:
    lo = math.floor(wb * rho * (1.0 - eps)) + 1
    hi = math.ceil(wb * rho * (1.0 + eps)) - 1
    return lo, hi


def _candidate_grid(flow: Flow, center: np.ndarray, radius: float, n: int) -> np.ndarray:
    """n x n square lattice clipped to the radius ball, in lexicographic
    (row-major) order; the center itself is the middle lattice point."""
    offs = np.linspace(-radius, radius, n)
    ox, oy = np.meshgrid(offs, offs, indexing="ij")
    pts = center[None, :] + np.stack([ox.ravel(), oy.ravel()], axis=1)
    keep = np.hypot(ox.ravel(), oy.ravel()) <= radius + 1e-12
    pts = pts[keep]
    if not flow.surface.is_torus:
        x0, x1, y0, y1 = flow.surface.bounds
        inside = ((pts[:, 0] >= x0) & (pts[:, 0] <= x1)
                  & (pts[:, 1] >= y0) & (pts[:, 1] <= y1))
        pts = pts[inside]
    return flow.surface.wrap(pts)


def _orbit_samples(flow: Flow, cands: np.ndarray, span: float, dh: float):
    _, recs, alive, exit_t = flow.advance_batch(cands, span, rec_dt=dh)
    orbs = np.ascontiguousarray(recs.transpose(1, 0, 2))
    ny = orbs.shape[1]
    n_valid = np.full(cands.shape[0], ny, dtype=np.int64)
    esc = ~alive
    if np.any(esc):
        n_valid[esc] = np.minimum(ny, (exit_t[esc] / dh).astype(np.int64) + 1)
    return orbs, n_valid


def _torus_args(flow: Flow):
    if flow.surface.is_torus:
        px, py = flow.surface.periods
        return True, px, py
    return False, 0.0, 0.0


@dataclass
class _Lattice:
    """Shared discretization of one verification problem."""

    flow: Flow
    times: np.ndarray
    xi_pts: np.ndarray
    dt: float
    dh: float
    rho: int
    span: float
    bnd_rows: np.ndarray | None          # standard mode only
    lo_arr: np.ndarray | None
    hi_arr: np.ndarray | None

    @property
    def n_rows(self) -> int:
        return self.times.size


def _build_lattice(xi: Pseudotrajectory, mode: str, eps: float,
                   search: SearchConfig, window) -> _Lattice:
    """Rows are xi sample times, columns candidate-orbit sample times.

    Oriented mode puts rows at dp_dt and columns at dp_dt/cols_per_row.
    Standard mode puts rows AND columns at the fine spacing dp_dt/rho so
    that slope-one alignments are plain diagonals (no spurious sweep cost)
    while the slope band is enforced per block of block_rows * rho fine
    rows; standard staircases are then a subset of the oriented ones on
    the same lattice."""
    flow = xi.flow
    t_min, t_max = window if window is not None else xi.window
    if t_max <= t_min:
        raise ConfigError("empty verification window")
    dt, dt_steps = _snap_dt(flow, search.dp_dt if search.dp_dt is not None else xi.T0 / 20)
    if search.cols_per_row is not None:
        rho = search.cols_per_row
        if dt_steps % rho != 0:
            raise ConfigError(f"cols_per_row {rho} must divide dt/step {dt_steps}")
    else:
        rho = _pick_rho(dt_steps, search.block_rows, eps) if mode == STANDARD else 1
    dh = dt / rho
    row_dt = dh if mode == STANDARD else dt
    n_rows = int(round((t_max - t_min) / row_dt)) + 1
    times = t_min + np.arange(n_rows) * row_dt
    xi_pts = np.ascontiguousarray(np.atleast_2d(xi.eval(times)))
    length = t_max - t_min
    if mode == STANDARD:
        span = (1.0 + eps) * length + 2 * dt
    else:
        span = search.span_factor * length + 2 * dt
    bnd = lo = hi = None
    if mode == STANDARD:
        w_fine = search.block_rows * rho
        starts = list(range(0, n_rows - 1, w_fine))
        bnd = np.array([0] + [min(s + w_fine, n_rows - 1) for s in starts], dtype=np.int64)
        bnd = np.unique(bnd)
        lo_list, hi_list = [], []
        for a, b in zip(bnd[:-1], bnd[1:]):
            lo_b, hi_b = _band(int(b - a), 1, eps)
            if lo_b > hi_b:
                raise ConfigError(
                    f"slope band empty for block of {b - a} fine rows at eps={eps}; "
                    f"increase cols_per_row (rho={rho})")
            lo_list.append(lo_b)
            hi_list.append(hi_b)
        lo = np.array(lo_list, dtype=np.int64)
        hi = np.array(hi_list, dtype=np.int64)
    return _Lattice(flow, times, xi_pts, dt, dh, rho, span, bnd, lo, hi)


def _run_level(lat: _Lattice, mode: str, cands: np.ndarray, best_so_far: float):
    """DP over one candidate grid; returns (sups, orbs, n_valid)."""
    flow = lat.flow
    tor, px, py = _torus_args(flow)
    orbs, n_valid = _orbit_samples(flow, cands, lat.span, lat.dh)
    ny = orbs.shape[1]
    sups = np.full(cands.shape[0], _kernels.BIG)
    prev = np.empty(ny)
    cur = np.empty(ny)
    if mode == STANDARD:
        layers = np.empty((lat.bnd_rows.size, ny))
        parent = np.empty((lat.bnd_rows.size, ny), dtype=np.int32)
    start_costs = flow.surface.dist(lat.xi_pts[0], cands)
    best = best_so_far
    for c in np.argsort(start_costs, kind="stable"):
        if start_costs[c] >= best:
            continue  # sup >= start cost: cannot beat the incumbent
        if mode == ORIENTED:
            s, _ = _kernels.dp_oriented(lat.xi_pts, orbs[c], n_valid[c], tor, px, py, prev, cur)
        else:
            s, _ = _kernels.dp_standard(lat.xi_pts, orbs[c], n_valid[c], lat.bnd_rows,
                                        lat.lo_arr, lat.hi_arr, 0, tor, px, py,
                                        layers, parent)
        sups[c] = s
        if s < best:
            best = s
    return sups, orbs, n_valid


def _staircase_to_warp(times, path_cols, dh):
    """Turn matched (row -> column set) staircase data into a strictly
    increasing piecewise-linear warp through per-row column midpoints."""
    h = np.array([0.5 * (a + b) * dh for a, b in path_cols])
    return Reparametrization.from_monotone_samples(times, h, min_slope=1e-9)


def _extract_warp(lat: _Lattice, mode: str, orb: np.ndarray, nv: int):
    tor, px, py = _torus_args(lat.flow)
    n_rows = lat.n_rows
    if mode == ORIENTED:
        moves = np.empty((n_rows, nv), dtype=np.int8)
        sup, end = _kernels.dp_oriented_moves(lat.xi_pts, orb, nv, tor, px, py, moves)
        lo = np.full(n_rows, -1, dtype=np.int64)
        hi = np.full(n_rows, -1, dtype=np.int64)
        i, j = n_rows - 1, end
        while True:
            if lo[i] < 0 or j < lo[i]:
                lo[i] = j
            if j > hi[i]:
                hi[i] = j
            if i == 0 and j == 0:
                break
            mv = moves[i, j]
            if mv == 1:
                j -= 1
            elif mv == 2:
                i -= 1
                j -= 1
            elif mv == 3:
                i -= 1
            else:
                break
        warp = _staircase_to_warp(lat.times, list(zip(lo, hi)), lat.dh)
        return sup, warp
    layers = np.empty((lat.bnd_rows.size, orb.shape[0]))
    parent = np.empty((lat.bnd_rows.size, orb.shape[0]), dtype=np.int32)
    sup, end = _kernels.dp_standard(lat.xi_pts, orb, nv, lat.bnd_rows, lat.lo_arr,
                                    lat.hi_arr, 0, tor, px, py, layers, parent)
    cols = [end]
    for b in range(lat.bnd_rows.size - 1, 0, -1):
        cols.append(int(parent[b, cols[-1]]))
    cols = cols[::-1]
    knot_t = lat.times[lat.bnd_rows]
    knot_h = np.array(cols, dtype=float) * lat.dh
    warp = Reparametrization.from_knots(knot_t, knot_h)
    return sup, warp


def verify_shadowing(xi: Pseudotrajectory, mode: str, eps_target: float,
                     search: SearchConfig | None = None,
                     window: tuple[float, float] | None = None) -> ShadowingResult:
    """Search candidate points and monotone warps for an eps_target-shadow
    of xi.  sup_dist is the minimax value over the evaluation lattice for
    the best candidate; `shadowed` means sup_dist < eps_target within this
    budget."""
    if mode not in (ORIENTED, STANDARD):
        raise ValueError(f"unknown mode {mode!r}")
    if eps_target <= 0:
        raise ValueError("eps_target must be positive")
    search = search or SearchConfig()
    lat = _build_lattice(xi, mode, eps_target, search, window)
    radius = search.resolved_radius(eps_target)
    center = lat.xi_pts[0]
    ny_est = int(round(lat.span / lat.dh)) + 1
    cells = lat.n_rows * ny_est * search.grid_n**2 * (search.refine_rounds + 1)
    if cells > search.cell_budget:
        raise BudgetExceeded(f"{cells:.2e} DP cells exceed budget {search.cell_budget:.2e}")

    best_sup = _kernels.BIG
    best_point = center
    best_orb = None
    best_nv = 0
    levels = 0
    n_cands_total = 0
    spacing = 2 * radius / (search.grid_n - 1)
    finest = spacing
    cur_center, cur_radius = center, radius
    for level in range(search.refine_rounds + 1):
        cands = _candidate_grid(lat.flow, cur_center, cur_radius, search.grid_n)
        if cands.shape[0] == 0:
            raise ConfigError("empty candidate grid")
        sups, orbs, n_valid = _run_level(lat, mode, cands, best_sup)
        levels += 1
        n_cands_total += cands.shape[0]
        finest = 2 * cur_radius / (search.grid_n - 1)
        k = int(np.argmin(sups))
        if sups[k] < best_sup:
            best_sup = float(sups[k])
            best_point = cands[k]
            best_orb = orbs[k].copy()
            best_nv = int(n_valid[k])
        if search.decision_only and best_sup < eps_target:
            break
        if level < search.refine_rounds:
            cur_center = best_point
            cur_radius = cur_radius / search.refine_zoom
    warp = None
    if search.want_warp and best_orb is not None and np.isfinite(best_sup) and best_sup < _kernels.BIG:
        _, warp = _extract_warp(lat, mode, best_orb, best_nv)
    stats = {
        "mode": mode,
        "grid_n": search.grid_n,
        "radius": radius,
        "grid_levels": levels,
        "n_candidates": n_cands_total,
        "dp_dt": lat.dt,
        "cols_per_row": lat.rho,
        "orbit_span": lat.span,
        "n_rows": lat.n_rows,
        "finest_spacing": finest,
        "block_rows": search.block_rows if mode == STANDARD else None,
    }
    return ShadowingResult(mode, eps_target, best_sup, best_point, warp, stats)


# --------------------------------------------------------------------------
# Rep(eps) upgrade of an oriented alignment (anchor-block endpoint pinning).


@dataclass(frozen=True)
class UpgradeOutcome:
    success: bool
    warp: Reparametrization | None
    sup_dist: float
    failed_block: int | None = None
    reason: str | None = None


def _orbit_polyline(flow: Flow, candidate: np.ndarray, span: float, dh: float) -> np.ndarray:
    _, recs, _, _ = flow.advance_batch(np.asarray(candidate, float)[None, :], span, rec_dt=dh)
    return recs[:, 0, :]


def _warp_sup_on_grid(flow: Flow, xi_pts, times, warp, poly, dh) -> float:
    cols = np.clip(np.round(warp(times) / dh).astype(int), 0, poly.shape[0] - 1)
    return float(flow.surface.dist(xi_pts, poly[cols]).max())


def upgrade_to_standard(xi: Pseudotrajectory, candidate, oriented_warp: Reparametrization,
                        eps: float, config: ShadowingConfig | None = None,
                        search: SearchConfig | None = None,
                        eps_prime_frac: float = 0.25,
                        window: tuple[float, float] | None = None) -> UpgradeOutcome:
    """Re-warp an oriented alignment into Rep(eps), preserving the oriented
    warp's endpoint matches on every anchor block [nT0, (n+1)T0].

    Precondition (checked): the oriented alignment tracks within
    eps_prime_frac * eps.  If a config is given, both curves must stay in
    its core region; leaving it raises LeftCoreRegion.  A block whose
    pinned endpoints force a chord slope outside (1-eps, 1+eps) yields a
    structured failure naming that block.
    """
    search = search or SearchConfig()
    flow = xi.flow
    candidate = np.asarray(candidate, dtype=float)
    t_min, t_max = window if window is not None else xi.window
    dt, dt_steps = _snap_dt(flow, search.dp_dt if search.dp_dt is not None else xi.T0 / 20)
    rho = (search.cols_per_row if search.cols_per_row is not None
           else _pick_rho(dt_steps, search.block_rows, eps))
    dh = dt / rho
    n_rows = int(round((t_max - t_min) / dh)) + 1
    times = t_min + np.arange(n_rows) * dh
    xi_pts = np.atleast_2d(xi.eval(times))

    h_end = float(oriented_warp(t_max))
    span = max(h_end, (1 + eps) * (t_max - t_min)) + 2 * dt
    poly = _orbit_polyline(flow, candidate, span, dh)

    sup_or = _warp_sup_on_grid(flow, xi_pts, times, oriented_warp, poly, dh)
    eps_prime = eps_prime_frac * eps
    if sup_or >= eps_prime:
        raise UpgradeError(
            f"oriented alignment error {sup_or:.4g} is not below eps'={eps_prime:.4g}")

    if config is not None:
        probe_idx = np.linspace(0, n_rows - 1, min(n_rows, 40)).astype(int)
        ok_xi = config.in_core_region(flow, xi_pts[probe_idx])
        if not np.all(ok_xi):
            bad = probe_idx[np.flatnonzero(~ok_xi)[0]]
            raise LeftCoreRegion(float(times[bad]), xi_pts[bad])
        orb_probe = poly[np.linspace(0, poly.shape[0] - 1, 40).astype(int)]
        ok_orb = config.in_core_region(flow, orb_probe)
        if not np.all(ok_orb):
            k = int(np.flatnonzero(~ok_orb)[0])
            raise LeftCoreRegion(float(k), orb_probe[k])

    # anchor-block pins from the oriented warp
    n_lo = int(round(t_min / xi.T0))
    n_hi = int(round(t_max / xi.T0))
    anchor_t = np.arange(n_lo, n_hi + 1) * xi.T0
    pins = np.maximum.accumulate(np.asarray(oriented_warp(anchor_t), dtype=float))
    pins[0] = max(pins[0], 0.0)
    pin_cols = np.round(pins / dh).astype(np.int64)
    for b in range(pin_cols.size - 1):
        slope = (pin_cols[b + 1] - pin_cols[b]) * dh / xi.T0
        if not (1 - eps < slope < 1 + eps):
            return UpgradeOutcome(False, None, sup_or, failed_block=n_lo + b,
                                  reason=f"block chord slope {slope:.4g} outside the band")

    rows_per_anchor = int(round(xi.T0 / dh))
    w_fine = search.block_rows * rho
    tor, px, py = _torus_args(flow)
    knot_t: list[float] = [float(anchor_t[0])]
    knot_h: list[float] = [float(pin_cols[0] * dh)]
    worst_block = None
    for b in range(pin_cols.size - 1):
        r0 = b * rows_per_anchor
        r1 = min((b + 1) * rows_per_anchor, n_rows - 1)
        sub = list(range(0, r1 - r0, w_fine)) + [r1 - r0]
        bnd = np.unique(np.array(sub, dtype=np.int64))
        lo_list, hi_list = [], []
        feasible = True
        for a, bb in zip(bnd[:-1], bnd[1:]):
            lo_b, hi_b = _band(int(bb - a), 1, eps)
            if lo_b > hi_b:
                feasible = False
                break
            lo_list.append(lo_b)
            hi_list.append(hi_b)
        target = int(pin_cols[b + 1] - pin_cols[b])
        use_linear = True
        if feasible and sum(lo_list) <= target <= sum(hi_list):
            xi_blk = np.ascontiguousarray(xi_pts[r0:r1 + 1])
            orb_blk = np.ascontiguousarray(poly[pin_cols[b]:pin_cols[b + 1] + sum(hi_list) + 1])
            nvb = orb_blk.shape[0]
            layers = np.empty((bnd.size, nvb))
            parent = np.empty((bnd.size, nvb), dtype=np.int32)
            _kernels.dp_standard(xi_blk, orb_blk, nvb, bnd,
                                 np.array(lo_list, np.int64), np.array(hi_list, np.int64),
                                 0, tor, px, py, layers, parent)
            if layers[-1, target] < _kernels.BIG:
                cols = [target]
                for bi in range(bnd.size - 1, 0, -1):
                    cols.append(int(parent[bi, cols[-1]]))
                cols = cols[::-1]
                for bi in range(1, bnd.size):
                    knot_t.append(float(times[r0 + bnd[bi]]))
                    knot_h.append(float((pin_cols[b] + cols[bi]) * dh))
                use_linear = False
        if use_linear:
            knot_t.append(float(anchor_t[b + 1]))
            knot_h.append(float(pin_cols[b + 1] * dh))
    warp = Reparametrization.from_knots(np.array(knot_t), np.array(knot_h))
    if not rep_membership(warp, eps):
        lo_s, hi_s = warp.slope_range()
        seg = int(np.argmax(warp.slopes)) if hi_s >= 1 + eps else int(np.argmin(warp.slopes))
        blk = int(np.searchsorted(anchor_t, warp.t_knots[seg], side="right")) - 1
        return UpgradeOutcome(False, None, sup_or, failed_block=n_lo + max(blk, 0),
                              reason=f"slopes [{lo_s:.4g}, {hi_s:.4g}] leave the band")
    sup_up = _warp_sup_on_grid(flow, xi_pts, times, warp, poly, dh)
    if sup_up < eps:
        return UpgradeOutcome(True, warp, sup_up)
    row_costs = flow.surface.dist(
        xi_pts, poly[np.clip(np.round(warp(times) / dh).astype(int), 0, poly.shape[0] - 1)])
    worst_block = n_lo + int(np.argmax(row_costs)) // max(rows_per_anchor, 1)
    return UpgradeOutcome(False, warp, sup_up, failed_block=worst_block,
                          reason="re-warped alignment still exceeds eps")


# --------------------------------------------------------------------------
# Threshold curves d_hat(eps).


def threshold_curve(flow: Flow, mode: str, eps_list, trials: int, seed: int,
                    start_box: tuple[float, float, float, float] | None = None,
                    n_anchors: int = 10, T0: float = 1.0,
                    search: SearchConfig | None = None,
                    bisect_steps: int = 7,
                    d_max: float | None = None) -> list[dict]:
    """For each eps, bisect on d: the largest tested d at which `trials`
    seeded random Pt(d) pseudotrajectories were all eps-shadowed in `mode`.
    Rows are made monotone nondecreasing in eps by a running max."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    base = search or SearchConfig()
    dec = SearchConfig(grid_n=base.grid_n, radius=base.radius, dp_dt=base.dp_dt,
                       cols_per_row=base.cols_per_row, block_rows=base.block_rows,
                       span_factor=base.span_factor, refine_rounds=base.refine_rounds,
                       refine_zoom=base.refine_zoom, cell_budget=base.cell_budget,
                       want_warp=False, decision_only=True)

    def sample_start(rng):
        if start_box is not None:
            x0, x1, y0, y1 = start_box
            return rng.uniform([x0, y0], [x1, y1])
        if flow.surface.is_torus:
            px, py = flow.surface.periods
            return rng.uniform([0.0, 0.0], [px, py])
        return rng.uniform([-2.0, -2.0], [2.0, 2.0])

    def all_pass(eps_idx: int, eps: float, d: float) -> bool:
        for trial in range(trials):
            rng = np.random.default_rng([seed, eps_idx, trial])
            xi = random_pseudotrajectory(flow, d, T0, n_anchors, sample_start(rng), rng)
            res = verify_shadowing(xi, mode, eps, search=dec)
            if not res.shadowed:
                return False
        return True

    rows = []
    for k, eps in enumerate(eps_list):
        hi = d_max if d_max is not None else 0.8 * eps
        if all_pass(k, eps, hi):
            d_hat, flag = hi, None
        else:
            lo_d, hi_d, d_hat = 0.0, hi, 0.0
            for _ in range(bisect_steps):
                mid = 0.5 * (lo_d + hi_d)
                if mid <= 0:
                    break
                if all_pass(k, eps, mid):
                    d_hat = mid
                    lo_d = mid
                else:
                    hi_d = mid
            flag = "below_resolution" if d_hat == 0.0 else None
        rows.append({"eps": float(eps), "d_hat": float(d_hat), "flag": flag})
    best = 0.0
    for row in rows:
        best = max(best, row["d_hat"])
        row["d_hat"] = best
    return rows
