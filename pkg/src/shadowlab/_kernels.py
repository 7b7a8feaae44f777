"""Compiled inner loops: batched RK4 integration and alignment DPs.

Everything here is deterministic and serial; orchestration, error handling
and all geometry decisions live in the plain-Python modules.
"""
from __future__ import annotations

import numpy as np
from numba import njit

BIG = 1e30


@njit(cache=True)
def _uv(ut, vt, x, y):
    r = np.sqrt(x * x + y * y)
    u = 0.0
    for k in range(ut.shape[0]):
        v = ut[k, 0]
        for _ in range(int(ut[k, 1])):
            v *= x
        for _ in range(int(ut[k, 2])):
            v *= y
        for _ in range(int(ut[k, 3])):
            v *= r
        if ut[k, 4] == 1.0:
            v *= np.sin(ut[k, 5] * x)
        elif ut[k, 4] == 2.0:
            v *= np.cos(ut[k, 5] * x)
        if ut[k, 6] == 1.0:
            v *= np.sin(ut[k, 7] * y)
        elif ut[k, 6] == 2.0:
            v *= np.cos(ut[k, 7] * y)
        u += v
    w = 0.0
    for k in range(vt.shape[0]):
        v = vt[k, 0]
        for _ in range(int(vt[k, 1])):
            v *= x
        for _ in range(int(vt[k, 2])):
            v *= y
        for _ in range(int(vt[k, 3])):
            v *= r
        if vt[k, 4] == 1.0:
            v *= np.sin(vt[k, 5] * x)
        elif vt[k, 4] == 2.0:
            v *= np.cos(vt[k, 5] * x)
        if vt[k, 6] == 1.0:
            v *= np.sin(vt[k, 7] * y)
        elif vt[k, 6] == 2.0:
            v *= np.cos(vt[k, 7] * y)
        w += v
    return u, w


@njit(cache=True)
def rk4_chunk(ut, vt, pts, h, n_steps, rec_every, is_torus, px, py,
              has_bounds, bx0, bx1, by0, by1, out, alive, exit_step, step0):
    """Advance all points n_steps of size h, recording every rec_every steps.

    pts is updated in place.  out[k] holds the state after k*rec_every steps
    (out[0] is the entry state).  Points that leave the plane bounds (or go
    non-finite) freeze where they were, alive[i] flips off and exit_step[i]
    records the global step index (step0 + local step).
    """
    n = pts.shape[0]
    for i in range(n):
        out[0, i, 0] = pts[i, 0]
        out[0, i, 1] = pts[i, 1]
    rec = 0
    for s in range(1, n_steps + 1):
        for i in range(n):
            if not alive[i]:
                continue
            x = pts[i, 0]
            y = pts[i, 1]
            u1, v1 = _uv(ut, vt, x, y)
            u2, v2 = _uv(ut, vt, x + 0.5 * h * u1, y + 0.5 * h * v1)
            u3, v3 = _uv(ut, vt, x + 0.5 * h * u2, y + 0.5 * h * v2)
            u4, v4 = _uv(ut, vt, x + h * u3, y + h * v3)
            nx = x + h * (u1 + 2.0 * u2 + 2.0 * u3 + u4) / 6.0
            ny = y + h * (v1 + 2.0 * v2 + 2.0 * v3 + v4) / 6.0
            if not (np.isfinite(nx) and np.isfinite(ny)):
                alive[i] = False
                exit_step[i] = step0 + s
                continue
            if is_torus:
                nx = nx % px
                ny = ny % py
            elif has_bounds and (nx < bx0 or nx > bx1 or ny < by0 or ny > by1):
                alive[i] = False
                exit_step[i] = step0 + s
                continue
            pts[i, 0] = nx
            pts[i, 1] = ny
        if rec_every > 0 and s % rec_every == 0:
            rec += 1
            for i in range(n):
                out[rec, i, 0] = pts[i, 0]
                out[rec, i, 1] = pts[i, 1]
    return rec


@njit(cache=True)
def _sqdist(ax, ay, bx, by, is_torus, px, py):
    dx = bx - ax
    dy = by - ay
    if is_torus:
        dx -= px * np.round(dx / px)
        dy -= py * np.round(dy / py)
    return dx * dx + dy * dy


@njit(cache=True)
def dp_oriented(xi, orb, nv, is_torus, px, py, prev, cur):
    """Minimax monotone alignment of xi (rows) against orb[:nv] (columns).

    Paths start at (0, 0), may move right/up/diagonal, and end anywhere on
    the last row; the cost of a path is the max of the point distances over
    every visited cell.  Returns (min cost, end column of the first minimal
    end cell).  prev/cur are scratch rows of length >= nv.
    """
    n_rows = xi.shape[0]
    if nv <= 0:
        return BIG, -1
    run = -1.0
    for j in range(nv):
        d = np.sqrt(_sqdist(xi[0, 0], xi[0, 1], orb[j, 0], orb[j, 1], is_torus, px, py))
        if d > run:
            run = d
        prev[j] = run
    for i in range(1, n_rows):
        for j in range(nv):
            m = prev[j]
            if j > 0:
                if prev[j - 1] < m:
                    m = prev[j - 1]
                if cur[j - 1] < m:
                    m = cur[j - 1]
            d = np.sqrt(_sqdist(xi[i, 0], xi[i, 1], orb[j, 0], orb[j, 1], is_torus, px, py))
            cur[j] = d if d > m else m
        for j in range(nv):
            prev[j] = cur[j]
    best = BIG
    end = -1
    for j in range(nv):
        if prev[j] < best:
            best = prev[j]
            end = j
    return best, end


@njit(cache=True)
def dp_oriented_moves(xi, orb, nv, is_torus, px, py, moves):
    """dp_oriented recording predecessor moves for path backtracking.

    moves[i, j]: 0 start, 1 from (i, j-1), 2 from (i-1, j-1), 3 from (i-1, j).
    Tie order prefers the diagonal, then up, then left.
    """
    n_rows = xi.shape[0]
    prev = np.empty(nv)
    cur = np.empty(nv)
    run = -1.0
    for j in range(nv):
        d = np.sqrt(_sqdist(xi[0, 0], xi[0, 1], orb[j, 0], orb[j, 1], is_torus, px, py))
        if d > run:
            run = d
        prev[j] = run
        moves[0, j] = 1 if j > 0 else 0
    for i in range(1, n_rows):
        for j in range(nv):
            m = BIG
            mv = 0
            if j > 0:
                if prev[j - 1] < m:
                    m = prev[j - 1]
                    mv = 2
            if prev[j] < m:
                m = prev[j]
                mv = 3
            if j > 0 and cur[j - 1] < m:
                m = cur[j - 1]
                mv = 1
            d = np.sqrt(_sqdist(xi[i, 0], xi[i, 1], orb[j, 0], orb[j, 1], is_torus, px, py))
            cur[j] = d if d > m else m
            moves[i, j] = mv
        for j in range(nv):
            prev[j] = cur[j]
    best = BIG
    end = -1
    for j in range(nv):
        if prev[j] < best:
            best = prev[j]
            end = j
    return best, end


@njit(cache=True)
def dp_standard(xi, orb, nv, bnd_rows, lo_arr, hi_arr, start_col,
                is_torus, px, py, layers, parent):
    """Banded minimax alignment: block transitions with slope-banded column
    advances, block interiors filled by monotone staircases.

    bnd_rows lists the block boundary row indices (first 0, last = last row);
    block b may advance the column by any amount in [lo_arr[b], hi_arr[b]].
    layers (n_bnd, nv_max) and parent (same shape, int32) are scratch outputs;
    layers[-1] holds the arrival costs, parent the predecessor columns.
    Returns (min cost over the last layer, its first argmin column).
    """
    nb = bnd_rows.shape[0]
    for j in range(layers.shape[1]):
        layers[0, j] = BIG
        parent[0, j] = -1
    if start_col < 0 or start_col >= nv:
        return BIG, -1
    d0 = np.sqrt(_sqdist(xi[bnd_rows[0], 0], xi[bnd_rows[0], 1],
                         orb[start_col, 0], orb[start_col, 1], is_torus, px, py))
    layers[0, start_col] = d0
    max_hi = 0
    for b in range(nb - 1):
        if hi_arr[b] > max_hi:
            max_hi = hi_arr[b]
    rowa = np.empty(max_hi + 1)
    rowb = np.empty(max_hi + 1)
    for b in range(1, nb):
        r0 = bnd_rows[b - 1]
        r1 = bnd_rows[b]
        lo = lo_arr[b - 1]
        hi = hi_arr[b - 1]
        for j in range(layers.shape[1]):
            layers[b, j] = BIG
            parent[b, j] = -1
        for j0 in range(nv):
            v0 = layers[b - 1, j0]
            if v0 >= BIG:
                continue
            width = hi
            if j0 + width > nv - 1:
                width = nv - 1 - j0
            if width < lo:
                continue
            run = -1.0
            for c in range(width + 1):
                d = np.sqrt(_sqdist(xi[r0, 0], xi[r0, 1],
                                    orb[j0 + c, 0], orb[j0 + c, 1], is_torus, px, py))
                if d > run:
                    run = d
                rowa[c] = run
            for rr in range(r0 + 1, r1 + 1):
                for c in range(width + 1):
                    m = rowa[c]
                    if c > 0:
                        if rowa[c - 1] < m:
                            m = rowa[c - 1]
                        if rowb[c - 1] < m:
                            m = rowb[c - 1]
                    d = np.sqrt(_sqdist(xi[rr, 0], xi[rr, 1],
                                        orb[j0 + c, 0], orb[j0 + c, 1], is_torus, px, py))
                    rowb[c] = d if d > m else m
                for c in range(width + 1):
                    rowa[c] = rowb[c]
            for delta in range(lo, width + 1):
                cand = rowa[delta] if rowa[delta] > v0 else v0
                if cand < layers[b, j0 + delta]:
                    layers[b, j0 + delta] = cand
                    parent[b, j0 + delta] = j0
    best = BIG
    end = -1
    for j in range(nv):
        if layers[nb - 1, j] < best:
            best = layers[nb - 1, j]
            end = j
    return best, end
