"""Pure-Python geometry kernels.

Reference implementation of the routines in ``_ckernels.pyx``. Both backends
perform the same floating-point operations in the same order so their results
agree bit for bit.
"""
from __future__ import annotations

from math import sqrt

BACKEND = "python"


def _seq(values):
    return values.tolist() if hasattr(values, "tolist") else list(values)


def max_displacement(cx, cy) -> float:
    xs, ys = _seq(cx), _seq(cy)
    best = 0.0
    for i in range(1, len(xs)):
        dx = xs[i] - xs[i - 1]
        dy = ys[i] - ys[i - 1]
        d = sqrt(dx * dx + dy * dy)
        if d > best:
            best = d
    return best


def speed_stats(t, cx, cy) -> tuple[float, float, float]:
    ts, xs, ys = _seq(t), _seq(cx), _seq(cy)
    n = len(ts)
    if n < 2:
        raise ValueError("window too short")
    lo = float("inf")
    hi = 0.0
    total = 0.0
    for i in range(1, n):
        dx = xs[i] - xs[i - 1]
        dy = ys[i] - ys[i - 1]
        v = sqrt(dx * dx + dy * dy) / (ts[i] - ts[i - 1])
        if v < lo:
            lo = v
        if v > hi:
            hi = v
        total += v
    return lo, hi, total / (n - 1)


def covers_grid(t, t0: float, t1: float, period: float, tol: float) -> bool:
    """True iff every grid time t0 + i*period <= t1 has a sample within tol."""
    ts = _seq(t)
    n = len(ts)
    j = 0
    i = 0
    checked = 0
    while True:
        expected = t0 + i * period
        if expected > t1 + tol:
            break
        while j < n and ts[j] < expected - tol:
            j += 1
        if j >= n or abs(ts[j] - expected) > tol:
            return False
        checked += 1
        i += 1
    return checked > 0


def nearest_annotated(annot_t, frame_t, half_window: float, tol: float) -> list[int]:
    """Index of the nearest annotated time for each frame time, or -1.

    Equidistant frames resolve to the earlier annotation.
    """
    a, f = _seq(annot_t), _seq(frame_t)
    n = len(a)
    out = [-1] * len(f)
    j = 0
    for k, tk in enumerate(f):
        while j + 1 < n and a[j + 1] <= tk:
            j += 1
        best = -1
        best_d = 0.0
        for c in (j, j + 1):
            if c < 0 or c >= n:
                continue
            d = abs(a[c] - tk)
            if d > half_window + tol:
                continue
            if best < 0 or d < best_d - tol:
                best, best_d = c, d
        out[k] = best
    return out


def extreme_index(values, maximize: bool, tol: float) -> int:
    vals = _seq(values)
    if not vals:
        raise ValueError("empty window")
    best = 0
    for i in range(1, len(vals)):
        if maximize:
            if vals[i] > vals[best] + tol:
                best = i
        elif vals[i] < vals[best] - tol:
            best = i
    return best


def iou(a, b) -> float:
    ix1 = a[0] if a[0] > b[0] else b[0]
    iy1 = a[1] if a[1] > b[1] else b[1]
    ix2 = a[2] if a[2] < b[2] else b[2]
    iy2 = a[3] if a[3] < b[3] else b[3]
    iw = ix2 - ix1
    ih = iy2 - iy1
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    return inter / union


def greedy_match(tx, ty, dx, dy, gate: float) -> list[tuple[int, int]]:
    """Greedy nearest-centroid assignment of detections to tracks.

    Pairs are taken in order of (distance, track index, detection index);
    pairs farther apart than ``gate`` are never matched.
    """
    txs, tys, dxs, dys = _seq(tx), _seq(ty), _seq(dx), _seq(dy)
    pairs = []
    for i in range(len(txs)):
        for j in range(len(dxs)):
            ex = txs[i] - dxs[j]
            ey = tys[i] - dys[j]
            d = sqrt(ex * ex + ey * ey)
            if d <= gate:
                pairs.append((d, i, j))
    pairs.sort()
    used_t: set[int] = set()
    used_d: set[int] = set()
    out = []
    for _, i, j in pairs:
        if i in used_t or j in used_d:
            continue
        used_t.add(i)
        used_d.add(j)
        out.append((i, j))
    return out
