"""Hot inner loops: ray traversal, grid search, greedy point thinning.

Every kernel exists twice: an ``_nb`` variant compiled with numba and an
``_np`` variant written against numpy/Python only. The public names
(``cast_rays``, ``astar``, ``dijkstra``, ``thin_points``) dispatch on
``_accel.USE_NUMBA``. The two variants share arithmetic expression by
expression so that their outputs are bit-identical.

Grid conventions: ``(row, col)`` indexing, cell ``(r, c)`` covers
``u in [c, c+1)``, ``v in [r, r+1)`` in cell units. Search costs are
integers: a straight step costs ``STRAIGHT * w`` and a diagonal step
``DIAGONAL * w`` where ``w`` is the per-cell weight of the entered cell
(0 marks a blocked cell). Diagonal moves may not cut a blocked corner.
"""
from __future__ import annotations

import heapq
import math

import numpy as np

from . import _accel
from ._accel import njit

STRAIGHT = 10000
DIAGONAL = 14142
UNREACHED = np.iinfo(np.int64).max

_DR = np.array([-1, -1, -1, 0, 0, 1, 1, 1], dtype=np.int64)
_DC = np.array([-1, 0, 1, -1, 1, -1, 0, 1], dtype=np.int64)

# window codes written by cast_rays
SEEN_NONE = 0
SEEN_FREE = 1
SEEN_OCC = 2


# --------------------------------------------------------------------------
# ray traversal
# --------------------------------------------------------------------------


@njit
def _visit_nb(occ, out, r, c, r0, c0, half, u0, v0, maxt):
    h, w = occ.shape
    if r < 0 or c < 0 or r >= h or c >= w:
        return True
    blocked = occ[r, c] != 0
    du = c + 0.5 - u0
    dv = r + 0.5 - v0
    if du * du + dv * dv <= maxt * maxt:
        wr = r - r0 + half
        wc = c - c0 + half
        if 0 <= wr < out.shape[0] and 0 <= wc < out.shape[1]:
            out[wr, wc] = 2 if blocked else 1
    return blocked


@njit
def _cast_rays_nb(occ, u0, v0, dirs, lens, half):
    c0 = int(math.floor(u0))
    r0 = int(math.floor(v0))
    out = np.zeros((2 * half + 1, 2 * half + 1), dtype=np.uint8)
    out[half, half] = 2 if occ[r0, c0] != 0 else 1
    inf = np.inf
    for k in range(dirs.shape[0]):
        dx = dirs[k, 0]
        dy = dirs[k, 1]
        maxt = lens[k]
        sx = 1 if dx > 0 else -1
        sy = 1 if dy > 0 else -1
        r = r0
        c = c0
        while True:
            if dx > 0:
                tx = (c + 1 - u0) / dx
            elif dx < 0:
                tx = (c - u0) / dx
            else:
                tx = inf
            if dy > 0:
                ty = (r + 1 - v0) / dy
            elif dy < 0:
                ty = (r - v0) / dy
            else:
                ty = inf
            if tx < ty:
                if tx > maxt:
                    break
                c += sx
                if _visit_nb(occ, out, r, c, r0, c0, half, u0, v0, maxt):
                    break
            elif ty < tx:
                if ty > maxt:
                    break
                r += sy
                if _visit_nb(occ, out, r, c, r0, c0, half, u0, v0, maxt):
                    break
            else:
                if tx > maxt or tx == inf:
                    break
                b1 = _visit_nb(occ, out, r, c + sx, r0, c0, half, u0, v0, maxt)
                b2 = _visit_nb(occ, out, r + sy, c, r0, c0, half, u0, v0, maxt)
                if b1 or b2:
                    break
                c += sx
                r += sy
                if _visit_nb(occ, out, r, c, r0, c0, half, u0, v0, maxt):
                    break
    return out


def _cast_rays_np(occ, u0, v0, dirs, lens, half):
    h, w = occ.shape
    c0 = int(math.floor(u0))
    r0 = int(math.floor(v0))
    out = np.zeros((2 * half + 1, 2 * half + 1), dtype=np.uint8)
    out[half, half] = 2 if occ[r0, c0] != 0 else 1

    dx = dirs[:, 0].astype(np.float64)
    dy = dirs[:, 1].astype(np.float64)
    maxt = lens.astype(np.float64)
    sx = np.where(dx > 0, 1, -1)
    sy = np.where(dy > 0, 1, -1)
    n = dirs.shape[0]
    r = np.full(n, r0, dtype=np.int64)
    c = np.full(n, c0, dtype=np.int64)
    active = np.ones(n, dtype=bool)

    def visit(idx, rr, cc):
        # returns blocked flags for rays idx at cells (rr, cc)
        inside = (rr >= 0) & (cc >= 0) & (rr < h) & (cc < w)
        blocked = np.ones(idx.size, dtype=bool)
        ri = np.where(inside, rr, 0)
        ci = np.where(inside, cc, 0)
        blocked[inside] = occ[ri[inside], ci[inside]] != 0
        du = cc + 0.5 - u0
        dv = rr + 0.5 - v0
        mt = maxt[idx]
        rec = inside & (du * du + dv * dv <= mt * mt)
        wr = rr - r0 + half
        wc = cc - c0 + half
        rec &= (wr >= 0) & (wc >= 0) & (wr < out.shape[0]) & (wc < out.shape[1])
        out[wr[rec], wc[rec]] = np.where(blocked[rec], 2, 1).astype(np.uint8)
        return blocked

    with np.errstate(divide="ignore", invalid="ignore"):
        while active.any():
            idx = np.nonzero(active)[0]
            ddx = dx[idx]
            ddy = dy[idx]
            ci = c[idx]
            ri = r[idx]
            tx = np.full(idx.size, np.inf)
            pos = ddx > 0
            neg = ddx < 0
            tx[pos] = (ci[pos] + 1 - u0) / ddx[pos]
            tx[neg] = (ci[neg] - u0) / ddx[neg]
            ty = np.full(idx.size, np.inf)
            pos = ddy > 0
            neg = ddy < 0
            ty[pos] = (ri[pos] + 1 - v0) / ddy[pos]
            ty[neg] = (ri[neg] - v0) / ddy[neg]
            mt = maxt[idx]

            xs = tx < ty
            ys = ty < tx
            tie = ~xs & ~ys
            t = np.where(xs, tx, ty)
            stop = (t > mt) | (tie & (tx == np.inf))
            active[idx[stop]] = False
            go = ~stop

            m = go & xs
            if m.any():
                sel = idx[m]
                c[sel] += sx[sel]
                b = visit(sel, r[sel], c[sel])
                active[sel[b]] = False
            m = go & ys
            if m.any():
                sel = idx[m]
                r[sel] += sy[sel]
                b = visit(sel, r[sel], c[sel])
                active[sel[b]] = False
            m = go & tie
            if m.any():
                sel = idx[m]
                b1 = visit(sel, r[sel], c[sel] + sx[sel])
                b2 = visit(sel, r[sel] + sy[sel], c[sel])
                b = b1 | b2
                active[sel[b]] = False
                sel = sel[~b]
                if sel.size:
                    c[sel] += sx[sel]
                    r[sel] += sy[sel]
                    b = visit(sel, r[sel], c[sel])
                    active[sel[b]] = False
    return out


# --------------------------------------------------------------------------
# grid search
# --------------------------------------------------------------------------


@njit
def _octile_nb(r, c, gr, gc, wmin):
    dr = abs(r - gr)
    dc = abs(c - gc)
    lo = min(dr, dc)
    hi = max(dr, dc)
    return wmin * (STRAIGHT * (hi - lo) + DIAGONAL * lo)


@njit
def _search_nb(weight, start, goal, wmin):
    # goal < 0 runs a full Dijkstra expansion
    h, w = weight.shape
    n = h * w
    g = np.full(n, UNREACHED, dtype=np.int64)
    parent = np.full(n, -1, dtype=np.int64)
    closed = np.zeros(n, dtype=np.uint8)
    gr = goal // w
    gc = goal % w
    g[start] = 0
    h0 = 0
    if goal >= 0:
        h0 = _octile_nb(start // w, start % w, gr, gc, wmin)
    heap = [(np.int64(h0), np.int64(start))]
    while len(heap) > 0:
        item = heapq.heappop(heap)
        idx = item[1]
        if closed[idx]:
            continue
        closed[idx] = 1
        if idx == goal:
            break
        r = idx // w
        c = idx % w
        base = g[idx]
        for k in range(8):
            nr = r + _DR[k]
            nc = c + _DC[k]
            if nr < 0 or nc < 0 or nr >= h or nc >= w:
                continue
            wt = weight[nr, nc]
            if wt == 0:
                continue
            diag = _DR[k] != 0 and _DC[k] != 0
            if diag:
                if weight[r, nc] == 0 or weight[nr, c] == 0:
                    continue
                step = DIAGONAL * wt
            else:
                step = STRAIGHT * wt
            nidx = nr * w + nc
            ng = base + step
            if ng < g[nidx]:
                g[nidx] = ng
                parent[nidx] = idx
                f = ng
                if goal >= 0:
                    f = ng + _octile_nb(nr, nc, gr, gc, wmin)
                heapq.heappush(heap, (np.int64(f), np.int64(nidx)))
    return g, parent


def _octile_py(r, c, gr, gc, wmin):
    dr = abs(r - gr)
    dc = abs(c - gc)
    lo = min(dr, dc)
    return wmin * (STRAIGHT * (max(dr, dc) - lo) + DIAGONAL * lo)


def _search_np(weight, start, goal, wmin):
    h, w = weight.shape
    n = h * w
    wt = weight.ravel().tolist()
    g = [UNREACHED] * n
    parent = [-1] * n
    closed = bytearray(n)
    gr, gc = divmod(goal, w) if goal >= 0 else (0, 0)
    moves = [
        (int(dr), int(dc), DIAGONAL if dr != 0 and dc != 0 else STRAIGHT)
        for dr, dc in zip(_DR, _DC)
    ]
    g[start] = 0
    h0 = _octile_py(start // w, start % w, gr, gc, wmin) if goal >= 0 else 0
    heap = [(h0, start)]
    while heap:
        _, idx = heapq.heappop(heap)
        if closed[idx]:
            continue
        closed[idx] = 1
        if idx == goal:
            break
        r, c = divmod(idx, w)
        base = g[idx]
        for dr, dc, unit in moves:
            nr = r + dr
            nc = c + dc
            if nr < 0 or nc < 0 or nr >= h or nc >= w:
                continue
            nidx = nr * w + nc
            cw = wt[nidx]
            if cw == 0:
                continue
            if dr != 0 and dc != 0 and (wt[r * w + nc] == 0 or wt[nr * w + c] == 0):
                continue
            ng = base + unit * cw
            if ng < g[nidx]:
                g[nidx] = ng
                parent[nidx] = idx
                f = ng + _octile_py(nr, nc, gr, gc, wmin) if goal >= 0 else ng
                heapq.heappush(heap, (f, nidx))
    return np.array(g, dtype=np.int64), np.array(parent, dtype=np.int64)


# --------------------------------------------------------------------------
# greedy thinning
# --------------------------------------------------------------------------


@njit
def _thin_points_nb(pts, min_d2):
    n = pts.shape[0]
    keep = np.empty(n, dtype=np.int64)
    m = 0
    for i in range(n):
        ok = True
        for j in range(m):
            dx = pts[i, 0] - pts[keep[j], 0]
            dy = pts[i, 1] - pts[keep[j], 1]
            if dx * dx + dy * dy < min_d2:
                ok = False
                break
        if ok:
            keep[m] = i
            m += 1
    return keep[:m].copy()


def _thin_points_np(pts, min_d2):
    n = pts.shape[0]
    keep = np.empty(n, dtype=np.int64)
    m = 0
    for i in range(n):
        if m:
            acc = pts[keep[:m]]
            dx = pts[i, 0] - acc[:, 0]
            dy = pts[i, 1] - acc[:, 1]
            if np.any(dx * dx + dy * dy < min_d2):
                continue
        keep[m] = i
        m += 1
    return keep[:m].copy()


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------


def cast_rays(occ: np.ndarray, u0: float, v0: float, dirs: np.ndarray,
              lens: np.ndarray, half: int) -> np.ndarray:
    """Trace rays from ``(u0, v0)`` (cell units) and return a seen-window.

    The window is ``(2*half+1)`` square, centred on the origin cell, holding
    ``SEEN_NONE``/``SEEN_FREE``/``SEEN_OCC``. Each ray stops at the first
    occupied cell or once its next boundary crossing lies beyond ``lens[k]``.
    Cells whose centre is farther than ``lens[k]`` are traversed but not
    recorded.
    """
    occ = np.ascontiguousarray(occ, dtype=np.uint8)
    dirs = np.ascontiguousarray(dirs, dtype=np.float64)
    lens = np.ascontiguousarray(lens, dtype=np.float64)
    fn = _cast_rays_nb if _accel.USE_NUMBA else _cast_rays_np
    return fn(occ, float(u0), float(v0), dirs, lens, int(half))


def _search(weight, start, goal, wmin):
    weight = np.ascontiguousarray(weight, dtype=np.int64)
    fn = _search_nb if _accel.USE_NUMBA else _search_np
    return fn(weight, int(start), int(goal), int(wmin))


def astar(weight: np.ndarray, start: int, goal: int, wmin: int):
    """A* from flat index ``start`` to ``goal``; returns ``(g, parent)``."""
    return _search(weight, start, goal, wmin)


def dijkstra(weight: np.ndarray, start: int):
    """Full single-source expansion; returns ``(g, parent)``."""
    return _search(weight, start, -1, 1)


def thin_points(pts: np.ndarray, min_dist: float) -> np.ndarray:
    """Indices of points kept by first-come greedy thinning at ``min_dist``."""
    pts = np.ascontiguousarray(pts, dtype=np.float64).reshape(-1, 2)
    fn = _thin_points_nb if _accel.USE_NUMBA else _thin_points_np
    return fn(pts, float(min_dist) * float(min_dist))


def trace_path(parent: np.ndarray, goal: int) -> list[int]:
    out = [int(goal)]
    p = int(parent[goal])
    while p >= 0:
        out.append(p)
        p = int(parent[p])
    out.reverse()
    return out
