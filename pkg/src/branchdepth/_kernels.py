"""Compiled inner loops for matching, aggregation, and refinement.

Everything here is deterministic under any thread count: parallel loops
only ever write disjoint pixels, and all accumulation is integer.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)
_U1 = np.uint64(1)
_U2 = np.uint64(2)
_U4 = np.uint64(4)
_U56 = np.uint64(56)


@njit(cache=True, inline="always")
def _popcount64(x):
    x = x - ((x >> _U1) & _M1)
    x = (x & _M2) + ((x >> _U2) & _M2)
    x = (x + (x >> _U4)) & _M4
    return (x * _H01) >> _U56


@njit(cache=True, parallel=True)
def census_kernel(img, radius):
    """Per-pixel census code: one bit per window neighbor, 1 iff darker than center.

    Bits are packed in window scan order, first neighbor in the most
    significant position. Borders replicate edge pixels.
    """
    h, w = img.shape
    out = np.zeros((h, w), np.uint64)
    for y in prange(h):
        for x in range(w):
            center = img[y, x]
            code = np.uint64(0)
            for dy in range(-radius, radius + 1):
                yy = y + dy
                if yy < 0:
                    yy = 0
                elif yy >= h:
                    yy = h - 1
                for dx in range(-radius, radius + 1):
                    if dy == 0 and dx == 0:
                        continue
                    xx = x + dx
                    if xx < 0:
                        xx = 0
                    elif xx >= w:
                        xx = w - 1
                    code = code << _U1
                    if img[yy, xx] < center:
                        code = code | _U1
            out[y, x] = code
    return out


@njit(cache=True, parallel=True)
def cost_volume_kernel(ref, other, min_disp, num_disp, scale, large, shift_positive):
    """Hamming cost volume between census rasters, scaled to penalty units.

    ``shift_positive`` False: reference is the left view, candidate match at
    x - d. True: reference is the right view, candidate at x + d.
    Out-of-range correspondences cost ``large``.
    """
    h, w = ref.shape
    out = np.empty((h, w, num_disp), np.uint16)
    for y in prange(h):
        for x in range(w):
            code = ref[y, x]
            for i in range(num_disp):
                d = min_disp + i
                xx = x + d if shift_positive else x - d
                if xx < 0 or xx >= w:
                    out[y, x, i] = large
                else:
                    out[y, x, i] = np.uint16(scale * _popcount64(code ^ other[y, xx]))
    return out


@njit(cache=True)
def _walk_line(cost, out, p1, p2, x0, y0, dx, dy):
    """Run the path recurrence along one line, accumulating into ``out``.

    L(p,d) = C(p,d) + min(L(q,d), L(q,d-1)+P1, L(q,d+1)+P1, min_k L(q,k)+P2)
             - min_k L(q,k)        with q the path predecessor,
    and L = C at the line start.
    """
    h, w, nd = cost.shape
    prev = np.empty(nd, np.int32)
    cur = np.empty(nd, np.int32)
    x = x0
    y = y0
    for d in range(nd):
        v = np.int32(cost[y, x, d])
        prev[d] = v
        out[y, x, d] += v
    x += dx
    y += dy
    while 0 <= x < w and 0 <= y < h:
        m = prev[0]
        for k in range(1, nd):
            if prev[k] < m:
                m = prev[k]
        cap = m + p2
        for d in range(nd):
            best = prev[d]
            if d > 0 and prev[d - 1] + p1 < best:
                best = prev[d - 1] + p1
            if d < nd - 1 and prev[d + 1] + p1 < best:
                best = prev[d + 1] + p1
            if cap < best:
                best = cap
            val = np.int32(cost[y, x, d]) + best - m
            cur[d] = val
            out[y, x, d] += val
        tmp = prev
        prev = cur
        cur = tmp
        x += dx
        y += dy


@njit(cache=True, parallel=True)
def aggregate_lines(cost, out, p1, p2, x0s, y0s, dx, dy):
    """Aggregate one direction given precomputed line start points.

    Lines of one direction touch disjoint pixels, so the parallel loop is
    race-free and the result is independent of scheduling.
    """
    for l in prange(x0s.shape[0]):
        _walk_line(cost, out, p1, p2, x0s[l], y0s[l], dx, dy)


@njit(cache=True, parallel=True)
def select_kernel(aggregated, min_disp, uniq_pct):
    """Winner-take-all with uniqueness rejection and parabolic subpixel offset.

    A pixel is invalidated when a disparity more than one step away from the
    winner costs the same or lies inside the uniqueness margin.
    """
    h, w, nd = aggregated.shape
    out = np.full((h, w), -1.0, np.float32)
    for y in prange(h):
        for x in range(w):
            best = aggregated[y, x, 0]
            bi = 0
            for d in range(1, nd):
                if aggregated[y, x, d] < best:
                    best = aggregated[y, x, d]
                    bi = d
            limit = np.int64(best) * (100 + uniq_pct)
            ok = True
            for d in range(nd):
                if d < bi - 1 or d > bi + 1:
                    s = aggregated[y, x, d]
                    if s == best or np.int64(s) * 100 < limit:
                        ok = False
                        break
            if not ok:
                continue
            val = float(min_disp + bi)
            if 0 < bi < nd - 1:
                sm = float(aggregated[y, x, bi - 1])
                sp = float(aggregated[y, x, bi + 1])
                denom = sm - 2.0 * float(best) + sp
                if denom > 0.0:
                    val += (sm - sp) / (2.0 * denom)
            out[y, x] = val
    return out


@njit(cache=True, parallel=True)
def lr_check_kernel(left, right, max_diff):
    """Invalidate left pixels whose right-view counterpart disagrees."""
    h, w = left.shape
    out = np.full((h, w), -1.0, np.float32)
    for y in prange(h):
        for x in range(w):
            dl = left[y, x]
            if dl < 0:
                continue
            xr = x - int(np.floor(dl + 0.5))
            if xr < 0 or xr >= w:
                continue
            dr = right[y, xr]
            if dr < 0:
                continue
            if abs(dl - dr) <= max_diff:
                out[y, x] = dl
    return out


@njit(cache=True)
def speckle_kernel(disp, min_size, max_range):
    """Invalidate 4-connected components smaller than ``min_size``.

    Two valid neighbors belong to the same component iff their disparities
    differ by at most ``max_range``.
    """
    h, w = disp.shape
    out = disp.copy()
    if min_size <= 0:
        return out
    visited = np.zeros(h * w, np.uint8)
    stack = np.empty(h * w, np.int64)
    comp = np.empty(h * w, np.int64)
    for ys in range(h):
        for xs in range(w):
            start = ys * w + xs
            if visited[start] or disp[ys, xs] < 0:
                continue
            visited[start] = 1
            top = 0
            stack[top] = start
            top += 1
            csize = 0
            while top > 0:
                top -= 1
                idx = stack[top]
                comp[csize] = idx
                csize += 1
                cy = idx // w
                cx = idx % w
                dv = disp[cy, cx]
                for n in range(4):
                    if n == 0:
                        nx, ny = cx - 1, cy
                    elif n == 1:
                        nx, ny = cx + 1, cy
                    elif n == 2:
                        nx, ny = cx, cy - 1
                    else:
                        nx, ny = cx, cy + 1
                    if nx < 0 or nx >= w or ny < 0 or ny >= h:
                        continue
                    nidx = ny * w + nx
                    if visited[nidx]:
                        continue
                    dn = disp[ny, nx]
                    if dn < 0 or abs(dn - dv) > max_range:
                        continue
                    visited[nidx] = 1
                    stack[top] = nidx
                    top += 1
            if csize < min_size:
                for i in range(csize):
                    idx = comp[i]
                    out[idx // w, idx % w] = -1.0
    return out


@njit(cache=True)
def gauss_seidel_kernel(u, data, conf, wh, wv, lam, iterations):
    """In-place Gauss-Seidel sweeps for the edge-weighted smoothing system.

    ``wh[y, x]`` couples (x, y) with (x+1, y); ``wv[y, x]`` couples (x, y)
    with (x, y+1). Raster sweep order is part of the contract: results must
    not depend on scheduling, so this kernel is single-threaded.
    """
    h, w = u.shape
    for _ in range(iterations):
        for y in range(h):
            for x in range(w):
                num = conf[y, x] * data[y, x]
                den = conf[y, x]
                if x > 0:
                    cw = lam * wh[y, x - 1]
                    num += cw * u[y, x - 1]
                    den += cw
                if x < w - 1:
                    cw = lam * wh[y, x]
                    num += cw * u[y, x + 1]
                    den += cw
                if y > 0:
                    cw = lam * wv[y - 1, x]
                    num += cw * u[y - 1, x]
                    den += cw
                if y < h - 1:
                    cw = lam * wv[y, x]
                    num += cw * u[y + 1, x]
                    den += cw
                if den > 0.0:
                    u[y, x] = num / den
