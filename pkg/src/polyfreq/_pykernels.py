"""Pure-Python implementations of the hot kernels.

These mirror ``_kernels.pyx`` line for line and are used whenever the
compiled extension is unavailable (or ``POLYFREQ_PURE_PYTHON=1``).
"""

import math

import numpy as np

STATUS_APPLIED = 0
STATUS_REJECTED = 1

ERR_NONE = 0
ERR_COLLINEAR = 1


def _clip(subject, cx1, cy1, cx2, cy2):
    out = []
    m = len(subject)
    if m == 0:
        return out
    ex = cx2 - cx1
    ey = cy2 - cy1
    sx, sy = subject[-1]
    s_in = ex * (sy - cy1) - ey * (sx - cx1)
    for px, py in subject:
        p_in = ex * (py - cy1) - ey * (px - cx1)
        if p_in >= 0.0:
            if s_in < 0.0:
                r = s_in / (s_in - p_in)
                out.append((sx + r * (px - sx), sy + r * (py - sy)))
            out.append((px, py))
        elif s_in >= 0.0:
            r = s_in / (s_in - p_in)
            out.append((sx + r * (px - sx), sy + r * (py - sy)))
        sx, sy, s_in = px, py, p_in
    return out


def _shoelace(pts):
    a = 0.0
    m = len(pts)
    for k in range(m):
        x0, y0 = pts[k]
        x1, y1 = pts[(k + 1) % m]
        a += x0 * y1 - x1 * y0
    return 0.5 * a


def clip_area(P, Q):
    """Area of the intersection of two counterclockwise convex polygons."""
    subject = [(float(x), float(y)) for x, y in P]
    q = [(float(x), float(y)) for x, y in Q]
    cx1, cy1 = q[-1]
    for cx2, cy2 in q:
        subject = _clip(subject, cx1, cy1, cx2, cy2)
        if not subject:
            return 0.0
        cx1, cy1 = cx2, cy2
    return max(_shoelace(subject), 0.0)


def overlap_grid(P, Q, angles, shifts_x, shifts_y):
    """Overlap areas |(R_theta P + s) ∩ Q| over a rotation/translation grid.

    ``P`` is rotated about the origin. Returns an array of shape
    ``(len(angles), len(shifts_x), len(shifts_y))``.
    """
    P = np.asarray(P, dtype=float)
    out = np.empty((len(angles), len(shifts_x), len(shifts_y)))
    for a, th in enumerate(angles):
        c, s = math.cos(th), math.sin(th)
        rx = c * P[:, 0] - s * P[:, 1]
        ry = s * P[:, 0] + c * P[:, 1]
        for i, dx in enumerate(shifts_x):
            for j, dy in enumerate(shifts_y):
                moved = np.column_stack((rx + dx, ry + dy))
                out[a, i, j] = clip_area(moved, Q)
    return out


def _side_stats(V):
    n = V.shape[0]
    per = 0.0
    lo = math.inf
    hi = 0.0
    lengths = []
    for k in range(n):
        dx = V[(k + 1) % n, 0] - V[k, 0]
        dy = V[(k + 1) % n, 1] - V[k, 1]
        l = math.hypot(dx, dy)
        lengths.append(l)
        per += l
    mean = per / n
    dev = 0.0
    for l in lengths:
        dev = max(dev, abs(l - mean))
    return per, dev / mean


def _turn(V, k):
    n = V.shape[0]
    a = V[(k - 1) % n]
    b = V[k]
    c = V[(k + 1) % n]
    return (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0])


def symmetrize_sweep(V, start, max_steps, tol, guard):
    """Run the cyclic partial Steiner symmetrization on a polygon.

    Step ``k`` symmetrizes the middle vertex of ``(i, i+1, i+2)`` with
    ``i = start + k (mod n)``. With ``guard`` set, steps that would break
    convexity are skipped (status 1, offset 0).

    Returns ``(history, offsets, leads, status, perimeters, deviations,
    steps, converged, error, error_step)``.
    """
    V = np.array(V, dtype=float)
    n = V.shape[0]
    history = np.empty((max_steps + 1, n, 2))
    offsets = np.zeros(max_steps)
    leads = np.zeros(max_steps, dtype=np.int64)
    status = np.zeros(max_steps, dtype=np.int8)
    perimeters = np.empty(max_steps + 1)
    deviations = np.empty(max_steps + 1)

    history[0] = V
    perimeters[0], deviations[0] = _side_stats(V)
    if deviations[0] < tol:
        return (history[:1], offsets[:0], leads[:0], status[:0], perimeters[:1],
                deviations[:1], 0, True, ERR_NONE, -1)

    i = start % n
    steps = 0
    converged = False
    for k in range(max_steps):
        i1 = (i + 1) % n
        i2 = (i + 2) % n
        x1, y1 = V[i]
        x2, y2 = V[i1]
        x3, y3 = V[i2]
        dx = x1 - x3
        dy = y1 - y3
        b = math.hypot(dx, dy)
        if b == 0.0:
            return (history[:k + 1], offsets[:k], leads[:k], status[:k],
                    perimeters[:k + 1], deviations[:k + 1], k, False, ERR_COLLINEAR, k)
        ex = dx / b
        ey = dy / b
        mx = 0.5 * (x1 + x3)
        my = 0.5 * (y1 + y3)
        wx = x2 - mx
        wy = y2 - my
        along = wx * ex + wy * ey
        # left normal of the v3 -> v1 direction
        nx = -ey
        ny = ex
        xi = wx * nx + wy * ny
        if abs(xi) <= 1e-14 * b:
            return (history[:k + 1], offsets[:k], leads[:k], status[:k],
                    perimeters[:k + 1], deviations[:k + 1], k, False, ERR_COLLINEAR, k)
        old = (V[i1, 0], V[i1, 1])
        V[i1, 0] = mx + xi * nx
        V[i1, 1] = my + xi * ny
        leads[k] = i
        if guard and (_turn(V, i) <= 0.0 or _turn(V, i1) <= 0.0 or _turn(V, i2) <= 0.0):
            V[i1, 0], V[i1, 1] = old
            status[k] = STATUS_REJECTED
            offsets[k] = 0.0
        else:
            offsets[k] = abs(along)
        history[k + 1] = V
        perimeters[k + 1], deviations[k + 1] = _side_stats(V)
        steps = k + 1
        i = i1
        if deviations[k + 1] < tol:
            converged = True
            break
    return (history[:steps + 1], offsets[:steps], leads[:steps], status[:steps],
            perimeters[:steps + 1], deviations[:steps + 1], steps, converged, ERR_NONE, -1)
