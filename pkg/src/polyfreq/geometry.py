"""Exact polygon primitives.

Polygons are stored counterclockwise. Barycentric coordinates ``(x; r)``
are taken about the vertex barycenter (mean of the vertices), which is
also the origin used by the manifold constraints.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import kernels
from .errors import DegenerateRadius, InvalidPolygon, Unsupported

__all__ = [
    "Polygon",
    "ManifoldPoint",
    "ManifoldResiduals",
    "DeficitReport",
    "area",
    "perimeter",
    "to_manifold",
    "to_polygon",
    "validate_manifold",
    "deficit_and_variances",
    "convex_intersection_area",
    "symmetric_difference_area",
    "fraenkel_asymmetry",
    "regular_polygon",
]


def _signed_area(v):
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _segments_cross(v):
    """True if any two non-adjacent edges of the closed chain intersect."""
    n = len(v)
    a = v
    b = np.roll(v, -1, axis=0)
    i, j = np.triu_indices(n, k=2)
    keep = ~((i == 0) & (j == n - 1))
    i, j = i[keep], j[keep]
    if i.size == 0:
        return False

    def orient(p, q, r):
        return (q[:, 0] - p[:, 0]) * (r[:, 1] - p[:, 1]) - (q[:, 1] - p[:, 1]) * (r[:, 0] - p[:, 0])

    p1, p2, q1, q2 = a[i], b[i], a[j], b[j]
    d1 = orient(q1, q2, p1)
    d2 = orient(q1, q2, p2)
    d3 = orient(p1, p2, q1)
    d4 = orient(p1, p2, q2)
    proper = (d1 * d2 < 0) & (d3 * d4 < 0)
    if proper.any():
        return True
    # touching configurations
    scale = float(np.ptp(v, axis=0).max()) ** 2
    eps = 1e-14 * scale

    def on_segment(p, q, r, d):
        return (np.abs(d) <= eps) & (np.minimum(p[:, 0], q[:, 0]) - 1e-12 <= r[:, 0]) & (
            r[:, 0] <= np.maximum(p[:, 0], q[:, 0]) + 1e-12) & (
            np.minimum(p[:, 1], q[:, 1]) - 1e-12 <= r[:, 1]) & (
            r[:, 1] <= np.maximum(p[:, 1], q[:, 1]) + 1e-12)

    touch = (on_segment(q1, q2, p1, d1) | on_segment(q1, q2, p2, d2)
             | on_segment(p1, p2, q1, d3) | on_segment(p1, p2, q2, d4))
    return bool(touch.any())


def _drop_collinear(v, rel_tol=1e-12):
    diam2 = float(np.ptp(v, axis=0).max()) ** 2
    changed = True
    while changed and len(v) > 3:
        changed = False
        prev = np.roll(v, 1, axis=0)
        nxt = np.roll(v, -1, axis=0)
        cross = (v[:, 0] - prev[:, 0]) * (nxt[:, 1] - v[:, 1]) - (v[:, 1] - prev[:, 1]) * (nxt[:, 0] - v[:, 0])
        flat = np.flatnonzero(np.abs(cross) <= rel_tol * diam2)
        if flat.size:
            v = np.delete(v, flat[0], axis=0)
            changed = True
    return v


class Polygon:
    """An immutable simple polygon with counterclockwise vertices.

    Parameters
    ----------
    vertices : array_like, shape (n, 2)
        Vertices in order. Clockwise input is reversed (keeping the first
        vertex first).
    simple : bool
        Verify simplicity on construction.
    simplify : bool
        Remove vertices whose two incident edges are collinear.
    """

    __slots__ = ("_v", "_area", "_convex")

    def __init__(self, vertices, simple=True, simplify=True):
        v = np.array(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise InvalidPolygon("vertices must have shape (n, 2) with n >= 3")
        if not np.all(np.isfinite(v)):
            raise InvalidPolygon("vertices must be finite")
        diam = float(np.ptp(v, axis=0).max())
        if diam == 0.0:
            raise InvalidPolygon("all vertices coincide")
        gaps = np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)
        if gaps.min() <= 1e-12 * diam:
            raise InvalidPolygon("consecutive vertices coincide")
        if simplify:
            v = _drop_collinear(v)
        a = _signed_area(v)
        if a < 0:
            v = np.concatenate([v[:1], v[:0:-1]])
            a = -a
        if a <= 0:
            raise InvalidPolygon("polygon has zero area")
        if simple and _segments_cross(v):
            raise InvalidPolygon("polygon is not simple")
        v.setflags(write=False)
        self._v = v
        self._area = a
        self._convex = None

    # -- construction -------------------------------------------------
    @classmethod
    def regular(cls, n, area=None, circumradius=1.0, phase=0.0, center=(0.0, 0.0)):
        return regular_polygon(n, area=area, circumradius=circumradius, phase=phase, center=center)

    @classmethod
    def from_json(cls, data):
        if isinstance(data, str):
            data = json.loads(data)
        orient = data.get("orientation", "ccw")
        if orient not in ("ccw", "cw"):
            raise InvalidPolygon(f"unknown orientation {orient!r}")
        v = np.asarray(data["vertices"], dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise InvalidPolygon("vertices must have shape (n, 2) with n >= 3")
        if (_signed_area(v) > 0) != (orient == "ccw"):
            raise InvalidPolygon(f"vertices are not in {orient} order")
        return cls(v)

    def to_json(self):
        return {"vertices": self._v.tolist(), "orientation": "ccw"}

    # -- basic quantities ---------------------------------------------
    @property
    def vertices(self):
        return self._v

    @property
    def n(self):
        return self._v.shape[0]

    @property
    def area(self):
        return self._area

    @property
    def side_lengths(self):
        return np.linalg.norm(np.roll(self._v, -1, axis=0) - self._v, axis=1)

    @property
    def perimeter(self):
        return float(self.side_lengths.sum())

    @property
    def barycenter(self):
        """Mean of the vertices."""
        return self._v.mean(axis=0)

    @property
    def centroid(self):
        """Area centroid."""
        v = self._v
        w = np.roll(v, -1, axis=0)
        cr = v[:, 0] * w[:, 1] - w[:, 0] * v[:, 1]
        return np.array([((v[:, 0] + w[:, 0]) * cr).sum(), ((v[:, 1] + w[:, 1]) * cr).sum()]) / (6 * self._area)

    @property
    def diameter(self):
        d = self._v[:, None, :] - self._v[None, :, :]
        return float(np.sqrt((d ** 2).sum(-1)).max())

    def is_convex(self, rel_tol=1e-12):
        if self._convex is None:
            v = self._v
            prev = np.roll(v, 1, axis=0)
            nxt = np.roll(v, -1, axis=0)
            cross = (v[:, 0] - prev[:, 0]) * (nxt[:, 1] - v[:, 1]) - (v[:, 1] - prev[:, 1]) * (nxt[:, 0] - v[:, 0])
            self._convex = bool(np.all(cross > -rel_tol * self.diameter ** 2))
        return self._convex

    # -- rigid motions and dilations ----------------------------------
    def translated(self, d):
        return Polygon(self._v + np.asarray(d, dtype=float), simple=False, simplify=False)

    def rotated(self, theta, about=(0.0, 0.0)):
        c, s = math.cos(theta), math.sin(theta)
        R = np.array([[c, -s], [s, c]])
        o = np.asarray(about, dtype=float)
        return Polygon((self._v - o) @ R.T + o, simple=False, simplify=False)

    def scaled(self, s, about=None):
        o = self.barycenter if about is None else np.asarray(about, dtype=float)
        return Polygon((self._v - o) * s + o, simple=False, simplify=False)

    def reflected(self):
        """Mirror image in the vertical line through the barycenter."""
        v = self._v.copy()
        c = self.barycenter
        v[:, 0] = 2 * c[0] - v[:, 0]
        return Polygon(v, simple=False, simplify=False)

    def with_vertex(self, i, point, simple=True):
        v = self._v.copy()
        v[i % self.n] = point
        return Polygon(v, simple=simple, simplify=False)

    def roll(self, k):
        """Same polygon with vertex ``k`` listed first."""
        return Polygon(np.roll(self._v, -k, axis=0), simple=False, simplify=False)

    def __repr__(self):
        return f"Polygon(n={self.n}, area={self._area:.6g})"

    def __eq__(self, other):
        return isinstance(other, Polygon) and self._v.shape == other._v.shape and np.array_equal(self._v, other._v)

    def __hash__(self):
        return hash(self._v.tobytes())


def regular_polygon(n, area=None, circumradius=1.0, phase=0.0, center=(0.0, 0.0)):
    """Regular n-gon with vertices at angles ``phase + 2 pi k / n``.

    ``area`` takes precedence over ``circumradius`` when given.
    """
    if n < 3:
        raise InvalidPolygon("n must be >= 3")
    if area is not None:
        circumradius = math.sqrt(2 * area / (n * math.sin(2 * math.pi / n)))
    k = np.arange(n)
    ang = phase + 2 * np.pi * k / n
    v = circumradius * np.column_stack((np.cos(ang), np.sin(ang))) + np.asarray(center, dtype=float)
    return Polygon(v, simple=False, simplify=False)


def area(P):
    """Shoelace area of a simple polygon."""
    if not isinstance(P, Polygon):
        P = Polygon(P)
    return P.area


def perimeter(P):
    if not isinstance(P, Polygon):
        P = Polygon(P)
    return P.perimeter


# ---------------------------------------------------------------------------
# barycentric (x; r) coordinates


@dataclass(frozen=True)
class ManifoldPoint:
    """Barycentric angles ``x`` (radians), radii ``r`` and target area."""

    x: np.ndarray
    r: np.ndarray
    alpha: float

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        r = np.array(self.r, dtype=float)
        if x.shape != r.shape or x.ndim != 1:
            raise ValueError("x and r must be 1-D arrays of equal length")
        x.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def n(self):
        return self.x.size

    @classmethod
    def regular(cls, n):
        return cls(np.full(n, 2 * np.pi / n), np.ones(n), 0.5 * n * math.sin(2 * math.pi / n))

    def to_json(self):
        return {"x": self.x.tolist(), "r": self.r.tolist(), "alpha": self.alpha}

    @classmethod
    def from_json(cls, data):
        if isinstance(data, str):
            data = json.loads(data)
        return cls(data["x"], data["r"], data["alpha"])

    def vertices(self):
        theta = np.concatenate(([0.0], np.cumsum(self.x[:-1])))
        return self.r[:, None] * np.column_stack((np.cos(theta), np.sin(theta)))


def to_manifold(P):
    """Barycentric angles and radii of ``P`` about its vertex barycenter."""
    if not isinstance(P, Polygon):
        P = Polygon(P)
    rel = P.vertices - P.barycenter
    r = np.hypot(rel[:, 0], rel[:, 1])
    if r.min() <= 1e-12 * P.diameter:
        raise DegenerateRadius("vertex barycenter coincides with a vertex")
    nxt = np.roll(rel, -1, axis=0)
    cross = rel[:, 0] * nxt[:, 1] - rel[:, 1] * nxt[:, 0]
    dot = (rel * nxt).sum(axis=1)
    x = np.arctan2(cross, dot)
    return ManifoldPoint(x, r, P.area)


def to_polygon(m):
    """Polygon with barycenter at the origin and first vertex on the +x axis."""
    return Polygon(m.vertices(), simple=False, simplify=False)


@dataclass(frozen=True)
class ManifoldResiduals:
    angle_sum: float
    area: float
    centroid_cos: float
    centroid_sin: float
    passed: bool


def validate_manifold(m, tol=1e-8):
    """Residuals of the angle-sum, area and centroid constraints.

    The angle sum is checked absolutely, the area relative to ``alpha``
    and the centroid sums relative to the mean radius.
    """
    x, r = m.x, m.r
    theta = np.concatenate(([0.0], np.cumsum(x[:-1])))
    angle = float(abs(x.sum() - 2 * np.pi))
    a = 0.5 * float(np.sum(r * np.roll(r, -1) * np.sin(x)))
    area_res = abs(a - m.alpha) / abs(m.alpha) if m.alpha != 0 else abs(a)
    scale = float(np.mean(np.abs(r))) or 1.0
    cx = float(abs(np.sum(r * np.cos(theta)))) / scale
    cy = float(abs(np.sum(r * np.sin(theta)))) / scale
    passed = angle < tol and area_res < tol and cx < tol and cy < tol
    return ManifoldResiduals(angle, area_res, cx, cy, passed)


# ---------------------------------------------------------------------------
# deficits and variances


@dataclass(frozen=True)
class DeficitReport:
    deficit_delta: float
    sigma_a2: float
    sigma_r2: float
    sigma_s2: float
    v: float
    area: float
    perimeter: float
    asymmetry: float | None = None

    @property
    def stability_ratio(self):
        """(v + |P| sigma_a^2) / delta, or nan at the regular polygon."""
        num = self.v + self.area * self.sigma_a2
        if self.deficit_delta <= 0:
            return math.nan
        return num / self.deficit_delta


def _variance(values):
    n = values.size
    return max(float(np.sum(values ** 2) / n - np.sum(values) ** 2 / n ** 2), 0.0)


def deficit_and_variances(P, asymmetry=False):
    """Polygonal isoperimetric deficit and the angle/radius/side variances."""
    if not isinstance(P, Polygon):
        P = Polygon(P)
    m = to_manifold(P)
    n = m.n
    x, r = m.x, m.r
    rn = np.roll(r, -1)
    sides2 = rn ** 2 + r ** 2 - 2 * rn * r * np.cos(x)
    sides = np.sqrt(np.maximum(sides2, 0.0))
    L = float(sides.sum())
    delta = L ** 2 - 2 * n * math.tan(math.pi / n) * float(np.sum(r * rn * np.sin(x)))
    sa = _variance(x)
    sr = _variance(r)
    ss = max(float(sides2.sum() / n - L ** 2 / n ** 2), 0.0)
    asym = fraenkel_asymmetry(P, n) if asymmetry else None
    return DeficitReport(delta, sa, sr, ss, ss + sr, P.area, L, asym)


# ---------------------------------------------------------------------------
# convex symmetric difference and Fraenkel asymmetry


def _require_convex(*polys):
    out = []
    for P in polys:
        if not isinstance(P, Polygon):
            P = Polygon(P)
        if not P.is_convex():
            raise Unsupported("symmetric difference is implemented for convex polygons only")
        out.append(P)
    return out


def convex_intersection_area(P, Q):
    P, Q = _require_convex(P, Q)
    return kernels.clip_area(P.vertices, Q.vertices)


def symmetric_difference_area(P, Q):
    """|P Δ Q| = |P| + |Q| - 2|P ∩ Q| for convex polygons."""
    P, Q = _require_convex(P, Q)
    inter = kernels.clip_area(P.vertices, Q.vertices)
    return max(P.area + Q.area - 2.0 * inter, 0.0)


def golden_section(f, a, b, tol=1e-10, max_iter=200):
    """Minimize a unimodal scalar function on [a, b]."""
    invphi = (math.sqrt(5) - 1) / 2
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) < tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def _best_translation(moving, ref, area_sum, scale, start=(0.0, 0.0)):
    def obj(d):
        return area_sum - 2.0 * kernels.clip_area(moving + d, ref)

    step = 0.05 * scale
    x0 = np.asarray(start, dtype=float)
    simplex = np.array([x0, x0 + [step, 0.0], x0 + [0.0, step]])
    res = minimize(obj, x0, method="Nelder-Mead",
                   options={"initial_simplex": simplex, "xatol": 1e-11 * scale,
                            "fatol": 1e-14 * scale ** 2, "maxiter": 4000, "maxfev": 8000})
    return float(res.fun), res.x


def fraenkel_asymmetry(P, n_ref, reflections=True, n_scan=12, return_motion=False):
    """Approximate inf over rigid motions R of |R(P) Δ Q| / |P|.

    ``Q`` is the regular ``n_ref``-gon of area |P| centred at the origin.
    Rotation is searched by a coarse scan followed by golden-section
    refinement over ``[0, 2 pi / n_ref)``; translation by Nelder-Mead
    started from barycenter alignment. Reflections of ``P`` are included
    when ``reflections`` is true.
    """
    (P,) = _require_convex(P)
    A = P.area
    Q = regular_polygon(n_ref, area=A).vertices
    scale = math.sqrt(A)
    period = 2 * math.pi / n_ref
    base = P.vertices - P.barycenter
    candidates = [base]
    if reflections:
        mirrored = base * np.array([-1.0, 1.0])
        candidates.append(mirrored[::-1].copy())

    best = (math.inf, None)
    for shape in candidates:
        cache = {}

        def inner(theta, shape=shape, cache=cache):
            c, s = math.cos(theta), math.sin(theta)
            rot = shape @ np.array([[c, s], [-s, c]])
            val, d = _best_translation(rot, Q, 2 * A, scale)
            cache[theta] = d
            return val

        grid = np.arange(n_scan) * period / n_scan
        vals = [inner(th) for th in grid]
        k = int(np.argmin(vals))
        h = period / n_scan
        theta, val = golden_section(inner, grid[k] - h, grid[k] + h, tol=1e-9)
        if vals[k] < val:
            theta, val = grid[k], vals[k]
        if val < best[0]:
            best = (val, (shape is not base, theta % period, cache.get(theta)))
    value = max(best[0], 0.0) / A
    if return_motion:
        return value, best[1]
    return value
