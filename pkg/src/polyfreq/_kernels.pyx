# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Semantics match ``_pykernels`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, cos, sin, INFINITY

cnp.import_array()

cdef enum:
    C_APPLIED = 0
    C_REJECTED = 1
    C_ERR_NONE = 0
    C_ERR_COLLINEAR = 1

STATUS_APPLIED = C_APPLIED
STATUS_REJECTED = C_REJECTED
ERR_NONE = C_ERR_NONE
ERR_COLLINEAR = C_ERR_COLLINEAR


cdef Py_ssize_t _clip(double[:, ::1] src, Py_ssize_t m, double[:, ::1] dst,
                      double cx1, double cy1, double cx2, double cy2) noexcept nogil:
    cdef Py_ssize_t k, out = 0
    cdef double ex = cx2 - cx1, ey = cy2 - cy1
    cdef double sx, sy, px, py, s_in, p_in, r
    if m == 0:
        return 0
    sx = src[m - 1, 0]
    sy = src[m - 1, 1]
    s_in = ex * (sy - cy1) - ey * (sx - cx1)
    for k in range(m):
        px = src[k, 0]
        py = src[k, 1]
        p_in = ex * (py - cy1) - ey * (px - cx1)
        if p_in >= 0.0:
            if s_in < 0.0:
                r = s_in / (s_in - p_in)
                dst[out, 0] = sx + r * (px - sx)
                dst[out, 1] = sy + r * (py - sy)
                out += 1
            dst[out, 0] = px
            dst[out, 1] = py
            out += 1
        elif s_in >= 0.0:
            r = s_in / (s_in - p_in)
            dst[out, 0] = sx + r * (px - sx)
            dst[out, 1] = sy + r * (py - sy)
            out += 1
        sx = px
        sy = py
        s_in = p_in
    return out


cdef double _clip_area(const double[:, ::1] P, Py_ssize_t nP, const double[:, ::1] Q, Py_ssize_t nQ,
                       double[:, ::1] buf_a, double[:, ::1] buf_b) noexcept nogil:
    cdef Py_ssize_t k, m = nP
    cdef double cx1, cy1, cx2, cy2, a = 0.0
    cdef double[:, ::1] src = buf_a
    cdef double[:, ::1] dst = buf_b
    cdef double[:, ::1] tmp
    for k in range(nP):
        src[k, 0] = P[k, 0]
        src[k, 1] = P[k, 1]
    cx1 = Q[nQ - 1, 0]
    cy1 = Q[nQ - 1, 1]
    for k in range(nQ):
        cx2 = Q[k, 0]
        cy2 = Q[k, 1]
        m = _clip(src, m, dst, cx1, cy1, cx2, cy2)
        if m == 0:
            return 0.0
        tmp = src
        src = dst
        dst = tmp
        cx1 = cx2
        cy1 = cy2
    for k in range(m):
        a += src[k, 0] * src[(k + 1) % m, 1] - src[(k + 1) % m, 0] * src[k, 1]
    a *= 0.5
    return a if a > 0.0 else 0.0


def clip_area(P, Q):
    """Area of the intersection of two counterclockwise convex polygons."""
    cdef const double[:, ::1] p = np.ascontiguousarray(P, dtype=np.float64)
    cdef const double[:, ::1] q = np.ascontiguousarray(Q, dtype=np.float64)
    cdef Py_ssize_t size = p.shape[0] + q.shape[0] + 4
    cdef double[:, ::1] a = np.empty((size, 2))
    cdef double[:, ::1] b = np.empty((size, 2))
    return _clip_area(p, p.shape[0], q, q.shape[0], a, b)


def overlap_grid(P, Q, angles, shifts_x, shifts_y):
    """Overlap areas |(R_theta P + s) ∩ Q| over a rotation/translation grid."""
    cdef const double[:, ::1] p = np.ascontiguousarray(P, dtype=np.float64)
    cdef const double[:, ::1] q = np.ascontiguousarray(Q, dtype=np.float64)
    cdef const double[::1] th = np.ascontiguousarray(angles, dtype=np.float64)
    cdef const double[::1] sx = np.ascontiguousarray(shifts_x, dtype=np.float64)
    cdef const double[::1] sy = np.ascontiguousarray(shifts_y, dtype=np.float64)
    cdef Py_ssize_t nP = p.shape[0], nQ = q.shape[0]
    cdef Py_ssize_t size = nP + nQ + 4
    cdef double[:, ::1] rot = np.empty((nP, 2))
    cdef double[:, ::1] moved = np.empty((nP, 2))
    cdef double[:, ::1] a = np.empty((size, 2))
    cdef double[:, ::1] b = np.empty((size, 2))
    out = np.empty((th.shape[0], sx.shape[0], sy.shape[0]))
    cdef double[:, :, ::1] res = out
    cdef Py_ssize_t ia, ix, iy, k
    cdef double c, s
    with nogil:
        for ia in range(th.shape[0]):
            c = cos(th[ia])
            s = sin(th[ia])
            for k in range(nP):
                rot[k, 0] = c * p[k, 0] - s * p[k, 1]
                rot[k, 1] = s * p[k, 0] + c * p[k, 1]
            for ix in range(sx.shape[0]):
                for iy in range(sy.shape[0]):
                    for k in range(nP):
                        moved[k, 0] = rot[k, 0] + sx[ix]
                        moved[k, 1] = rot[k, 1] + sy[iy]
                    res[ia, ix, iy] = _clip_area(moved, nP, q, nQ, a, b)
    return out


cdef void _side_stats(double[:, ::1] V, Py_ssize_t n, double* per, double* dev) noexcept nogil:
    cdef Py_ssize_t k, j
    cdef double l, dx, dy, mean, d
    cdef double total = 0.0
    for k in range(n):
        j = (k + 1) % n
        dx = V[j, 0] - V[k, 0]
        dy = V[j, 1] - V[k, 1]
        total += sqrt(dx * dx + dy * dy)
    mean = total / n
    d = 0.0
    for k in range(n):
        j = (k + 1) % n
        dx = V[j, 0] - V[k, 0]
        dy = V[j, 1] - V[k, 1]
        l = fabs(sqrt(dx * dx + dy * dy) - mean)
        if l > d:
            d = l
    per[0] = total
    dev[0] = d / mean


cdef double _turn(double[:, ::1] V, Py_ssize_t n, Py_ssize_t k) noexcept nogil:
    cdef Py_ssize_t a = (k - 1 + n) % n
    cdef Py_ssize_t c = (k + 1) % n
    return ((V[k, 0] - V[a, 0]) * (V[c, 1] - V[k, 1])
            - (V[k, 1] - V[a, 1]) * (V[c, 0] - V[k, 0]))


def symmetrize_sweep(V0, Py_ssize_t start, Py_ssize_t max_steps, double tol, bint guard):
    """Run the cyclic partial Steiner symmetrization on a polygon.

    See ``_pykernels.symmetrize_sweep`` for the return layout.
    """
    cdef double[:, ::1] V = np.array(V0, dtype=np.float64, order="C")
    cdef Py_ssize_t n = V.shape[0]
    history_arr = np.empty((max_steps + 1, n, 2))
    offsets_arr = np.zeros(max_steps)
    leads_arr = np.zeros(max_steps, dtype=np.int64)
    status_arr = np.zeros(max_steps, dtype=np.int8)
    per_arr = np.empty(max_steps + 1)
    dev_arr = np.empty(max_steps + 1)
    cdef double[:, :, ::1] history = history_arr
    cdef double[::1] offsets = offsets_arr
    cdef cnp.int64_t[::1] leads = leads_arr
    cdef cnp.int8_t[::1] status = status_arr
    cdef double[::1] per = per_arr
    cdef double[::1] dev = dev_arr
    cdef Py_ssize_t i, i1, i2, k, j, steps = 0
    cdef double x1, y1, x2, y2, x3, y3, dx, dy, b, ex, ey, mx, my, wx, wy
    cdef double along, nx, ny, xi, ox, oy
    cdef bint converged = False
    cdef int err = C_ERR_NONE
    cdef Py_ssize_t err_step = -1

    for j in range(n):
        history[0, j, 0] = V[j, 0]
        history[0, j, 1] = V[j, 1]
    _side_stats(V, n, &per[0], &dev[0])
    if dev[0] < tol:
        return (history_arr[:1], offsets_arr[:0], leads_arr[:0], status_arr[:0],
                per_arr[:1], dev_arr[:1], 0, True, ERR_NONE, -1)

    i = start % n
    with nogil:
        for k in range(max_steps):
            i1 = (i + 1) % n
            i2 = (i + 2) % n
            x1 = V[i, 0]
            y1 = V[i, 1]
            x2 = V[i1, 0]
            y2 = V[i1, 1]
            x3 = V[i2, 0]
            y3 = V[i2, 1]
            dx = x1 - x3
            dy = y1 - y3
            b = sqrt(dx * dx + dy * dy)
            if b == 0.0:
                err = C_ERR_COLLINEAR
                err_step = k
                steps = k
                break
            ex = dx / b
            ey = dy / b
            mx = 0.5 * (x1 + x3)
            my = 0.5 * (y1 + y3)
            wx = x2 - mx
            wy = y2 - my
            along = wx * ex + wy * ey
            nx = -ey
            ny = ex
            xi = wx * nx + wy * ny
            if fabs(xi) <= 1e-14 * b:
                err = C_ERR_COLLINEAR
                err_step = k
                steps = k
                break
            ox = V[i1, 0]
            oy = V[i1, 1]
            V[i1, 0] = mx + xi * nx
            V[i1, 1] = my + xi * ny
            leads[k] = i
            if guard and (_turn(V, n, i) <= 0.0 or _turn(V, n, i1) <= 0.0
                          or _turn(V, n, i2) <= 0.0):
                V[i1, 0] = ox
                V[i1, 1] = oy
                status[k] = C_REJECTED
                offsets[k] = 0.0
            else:
                offsets[k] = fabs(along)
            for j in range(n):
                history[k + 1, j, 0] = V[j, 0]
                history[k + 1, j, 1] = V[j, 1]
            _side_stats(V, n, &per[k + 1], &dev[k + 1])
            steps = k + 1
            i = i1
            if dev[k + 1] < tol:
                converged = True
                break
    if err != C_ERR_NONE:
        return (history_arr[:steps + 1], offsets_arr[:steps], leads_arr[:steps],
                status_arr[:steps], per_arr[:steps + 1], dev_arr[:steps + 1],
                steps, False, err, err_step)
    return (history_arr[:steps + 1], offsets_arr[:steps], leads_arr[:steps],
            status_arr[:steps], per_arr[:steps + 1], dev_arr[:steps + 1],
            steps, converged, ERR_NONE, -1)
