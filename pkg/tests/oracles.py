"""Independent reference implementations used to verify the library.

Everything here is deliberately written in a different style from the
production code (pure-Python loops, sets, dense matrices) so that a shared
bug is unlikely.
"""

from __future__ import annotations

import math

import numpy as np

ALL_DIRECTIONS = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1), (1, -1), (-1, 1))


def reference_aggregate(cost, p1, p2, directions=ALL_DIRECTIONS):
    """Brute-force per-path dynamic program over a cost volume.

    Walks every path line pixel by pixel with Python integers, applying
    L(p,d) = C(p,d) + min(L(q,d), L(q,d-1)+P1, L(q,d+1)+P1, min(L(q,.))+P2)
             - min(L(q,.))
    and summing path results.
    """
    h, w, nd = cost.shape
    total = [[[0] * nd for _ in range(w)] for _ in range(h)]
    for dx, dy in directions:
        starts = [
            (x, y)
            for y in range(h)
            for x in range(w)
            if not (0 <= x - dx < w and 0 <= y - dy < h)
        ]
        for x0, y0 in starts:
            prev = None
            x, y = x0, y0
            while 0 <= x < w and 0 <= y < h:
                c = [int(cost[y, x, d]) for d in range(nd)]
                if prev is None:
                    level = c
                else:
                    m = min(prev)
                    level = []
                    for d in range(nd):
                        cands = [prev[d], m + p2]
                        if d > 0:
                            cands.append(prev[d - 1] + p1)
                        if d < nd - 1:
                            cands.append(prev[d + 1] + p1)
                        level.append(c[d] + min(cands) - m)
                for d in range(nd):
                    total[y][x][d] += level[d]
                prev = level
                x += dx
                y += dy
    return np.asarray(total, dtype=np.int64)


def reference_flood_components(disp, max_range):
    """4-connected components of valid pixels; returns a size map."""
    h, w = disp.shape
    sizes = np.zeros((h, w), np.int64)
    seen = np.zeros((h, w), bool)
    for y0 in range(h):
        for x0 in range(w):
            if seen[y0, x0] or disp[y0, x0] < 0:
                continue
            frontier = [(x0, y0)]
            seen[y0, x0] = True
            members = []
            while frontier:
                x, y = frontier.pop()
                members.append((x, y))
                for nx, ny in ((x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)):
                    if 0 <= nx < w and 0 <= ny < h and not seen[ny, nx]:
                        if disp[ny, nx] >= 0 and abs(float(disp[ny, nx]) - float(disp[y, x])) <= max_range:
                            seen[ny, nx] = True
                            frontier.append((nx, ny))
            for x, y in members:
                sizes[y, x] = len(members)
    return sizes


def reference_box_iou(a, b):
    ax0, ay0, ax1, ay1 = a
    bx0, by0, bx1, by1 = b
    iw = min(ax1, bx1) - max(ax0, bx0)
    ih = min(ay1, by1) - max(ay0, by0)
    inter = max(0, iw) * max(0, ih)
    union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter
    return inter / union if union > 0 else 0.0


def reference_mask_iou(a, b):
    pa = set(map(tuple, np.argwhere(a)))
    pb = set(map(tuple, np.argwhere(b)))
    union = pa | pb
    if not union:
        return 0.0
    return len(pa & pb) / len(union)


def reference_average_precision(predictions, ground_truth, threshold, mode):
    """Exhaustive AP: explicit ranking, matching, and 101-point scan."""

    def iou(p, g):
        if mode == "box":
            return reference_box_iou(p.bbox, g.bbox)
        return reference_mask_iou(p.mask, g.mask)

    if len(ground_truth) == 0:
        return 0.0 if predictions else 1.0
    if not predictions:
        return 0.0
    order = sorted(
        range(len(predictions)),
        key=lambda i: (-predictions[i].score, predictions[i].instance_id),
    )
    taken = set()
    flags = []
    for i in order:
        best_v, best_j = 0.0, -1
        for j, g in enumerate(ground_truth):
            if j in taken:
                continue
            v = iou(predictions[i], g)
            if v >= threshold and v > best_v:
                best_v, best_j = v, j
        if best_j >= 0:
            taken.add(best_j)
            flags.append(1)
        else:
            flags.append(0)
    precisions = []
    recalls = []
    tp = 0
    for k, f in enumerate(flags, start=1):
        tp += f
        precisions.append(tp / k)
        recalls.append(tp / len(ground_truth))
    acc = 0.0
    for j in range(101):
        r = j / 100.0
        eligible = [p for p, rr in zip(precisions, recalls) if rr >= r]
        acc += max(eligible) if eligible else 0.0
    return acc / 101.0


def dense_wls_solve(disp, conf, wh, wv, lam):
    """Solve the smoothing system exactly with a dense linear solve."""
    h, w = disp.shape
    n = h * w
    a = np.zeros((n, n))
    b = np.zeros(n)
    for y in range(h):
        for x in range(w):
            i = y * w + x
            a[i, i] += conf[y, x]
            if disp[y, x] >= 0:
                b[i] += conf[y, x] * disp[y, x]
            if x + 1 < w:
                j = i + 1
                cw = lam * wh[y, x]
                a[i, i] += cw
                a[j, j] += cw
                a[i, j] -= cw
                a[j, i] -= cw
            if y + 1 < h:
                j = i + w
                cw = lam * wv[y, x]
                a[i, i] += cw
                a[j, j] += cw
                a[i, j] -= cw
                a[j, i] -= cw
    return np.linalg.solve(a, b).reshape(h, w)


def reference_stats(values):
    """Two-pass mean / sorted median / population std with Python floats."""
    vals = sorted(float(v) for v in values)
    n = len(vals)
    mean = sum(vals) / n
    var = sum((v - mean) ** 2 for v in vals) / n
    if n % 2:
        med = vals[n // 2]
    else:
        med = 0.5 * (vals[n // 2 - 1] + vals[n // 2])
    return mean, med, math.sqrt(var)


def reference_mad_filter(values, scale=1.4826, cutoff=3.0):
    """The documented outlier rule, recomputed from scratch."""
    vals = [float(v) for v in values]
    _, med, _ = reference_stats(vals)
    deviations = [abs(v - med) for v in vals]
    _, mad, _ = reference_stats(deviations)
    scaled = scale * mad
    if scaled <= 0:
        return vals
    return [v for v in vals if abs(v - med) <= cutoff * scaled]


def gaussian_kernel_direct(radius, sigma):
    """Normalized truncated Gaussian by direct evaluation."""
    size = 2 * radius + 1
    k = np.empty((size, size))
    for yy in range(size):
        for xx in range(size):
            dy, dx = yy - radius, xx - radius
            k[yy, xx] = math.exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma))
    return k / k.sum()


def parabola_vertex(sm, s0, sp):
    """Vertex of the parabola through (-1, sm), (0, s0), (1, sp) via polyfit."""
    coeffs = np.polyfit([-1.0, 0.0, 1.0], [sm, s0, sp], 2)
    return -coeffs[1] / (2.0 * coeffs[0])
