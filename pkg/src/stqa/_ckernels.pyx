# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled geometry kernels; see ``_kernels_py`` for the reference semantics."""

from libc.math cimport sqrt, fabs, INFINITY
from libc.stdlib cimport malloc, free, qsort

BACKEND = "cython"


cdef struct Pair:
    double d
    Py_ssize_t i
    Py_ssize_t j


cdef int _cmp_pair(const void *pa, const void *pb) noexcept nogil:
    cdef const Pair *a = <const Pair *> pa
    cdef const Pair *b = <const Pair *> pb
    if a.d < b.d:
        return -1
    if a.d > b.d:
        return 1
    if a.i != b.i:
        return -1 if a.i < b.i else 1
    if a.j != b.j:
        return -1 if a.j < b.j else 1
    return 0


def max_displacement(const double[::1] cx, const double[::1] cy):
    cdef Py_ssize_t i, n = cx.shape[0]
    cdef double dx, dy, d, best = 0.0
    for i in range(1, n):
        dx = cx[i] - cx[i - 1]
        dy = cy[i] - cy[i - 1]
        d = sqrt(dx * dx + dy * dy)
        if d > best:
            best = d
    return best


def speed_stats(const double[::1] t, const double[::1] cx, const double[::1] cy):
    cdef Py_ssize_t i, n = t.shape[0]
    cdef double dx, dy, v, lo = INFINITY, hi = 0.0, total = 0.0
    if n < 2:
        raise ValueError("window too short")
    for i in range(1, n):
        dx = cx[i] - cx[i - 1]
        dy = cy[i] - cy[i - 1]
        v = sqrt(dx * dx + dy * dy) / (t[i] - t[i - 1])
        if v < lo:
            lo = v
        if v > hi:
            hi = v
        total += v
    return lo, hi, total / (n - 1)


def covers_grid(const double[::1] t, double t0, double t1, double period, double tol):
    cdef Py_ssize_t n = t.shape[0], j = 0, i = 0, checked = 0
    cdef double expected
    while True:
        expected = t0 + i * period
        if expected > t1 + tol:
            break
        while j < n and t[j] < expected - tol:
            j += 1
        if j >= n or fabs(t[j] - expected) > tol:
            return False
        checked += 1
        i += 1
    return checked > 0


def nearest_annotated(const double[::1] annot_t, const double[::1] frame_t,
                      double half_window, double tol):
    cdef Py_ssize_t n = annot_t.shape[0], m = frame_t.shape[0]
    cdef Py_ssize_t k, j = 0, c, best
    cdef double tk, d, best_d
    out = [-1] * m
    for k in range(m):
        tk = frame_t[k]
        while j + 1 < n and annot_t[j + 1] <= tk:
            j += 1
        best = -1
        best_d = 0.0
        for c in range(j, j + 2):
            if c >= n:
                continue
            d = fabs(annot_t[c] - tk)
            if d > half_window + tol:
                continue
            if best < 0 or d < best_d - tol:
                best = c
                best_d = d
        out[k] = best
    return out


def extreme_index(const double[::1] values, bint maximize, double tol):
    cdef Py_ssize_t i, n = values.shape[0], best = 0
    if n == 0:
        raise ValueError("empty window")
    for i in range(1, n):
        if maximize:
            if values[i] > values[best] + tol:
                best = i
        elif values[i] < values[best] - tol:
            best = i
    return best


def iou(a, b):
    cdef double a0 = a[0], a1 = a[1], a2 = a[2], a3 = a[3]
    cdef double b0 = b[0], b1 = b[1], b2 = b[2], b3 = b[3]
    cdef double ix1 = a0 if a0 > b0 else b0
    cdef double iy1 = a1 if a1 > b1 else b1
    cdef double ix2 = a2 if a2 < b2 else b2
    cdef double iy2 = a3 if a3 < b3 else b3
    cdef double iw = ix2 - ix1, ih = iy2 - iy1, inter, union
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = (a2 - a0) * (a3 - a1) + (b2 - b0) * (b3 - b1) - inter
    return inter / union


def greedy_match(const double[::1] tx, const double[::1] ty,
                 const double[::1] dx, const double[::1] dy, double gate):
    cdef Py_ssize_t nt = tx.shape[0], nd = dx.shape[0], i, j, p, count = 0
    cdef double ex, ey, d
    cdef Pair *pairs
    cdef char *used_t
    cdef char *used_d
    out = []
    if nt == 0 or nd == 0:
        return out
    pairs = <Pair *> malloc(nt * nd * sizeof(Pair))
    used_t = <char *> malloc(nt)
    used_d = <char *> malloc(nd)
    if pairs == NULL or used_t == NULL or used_d == NULL:
        free(pairs); free(used_t); free(used_d)
        raise MemoryError()
    try:
        for i in range(nt):
            used_t[i] = 0
            for j in range(nd):
                ex = tx[i] - dx[j]
                ey = ty[i] - dy[j]
                d = sqrt(ex * ex + ey * ey)
                if d <= gate:
                    pairs[count].d = d
                    pairs[count].i = i
                    pairs[count].j = j
                    count += 1
        for j in range(nd):
            used_d[j] = 0
        qsort(pairs, count, sizeof(Pair), _cmp_pair)
        for p in range(count):
            i = pairs[p].i
            j = pairs[p].j
            if used_t[i] or used_d[j]:
                continue
            used_t[i] = 1
            used_d[j] = 1
            out.append((i, j))
    finally:
        free(pairs)
        free(used_t)
        free(used_d)
    return out
