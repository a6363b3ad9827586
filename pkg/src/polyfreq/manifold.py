"""Jacobians of the polygon manifold constraints and sampling near P_n.

A convex n-gon is described by barycentric angles ``x`` and radii ``r``
about its vertex barycenter. The constraint map

    Q(x, r) = (sum x_i,
               sum r_i r_{i+1} sin x_i,
               sum r_i cos(theta_i),
               sum r_i sin(theta_i)),      theta_i = x_1 + ... + x_{i-1}

cuts out the polygons of fixed area; adding the n equal-side equations
``l_i^2 - s = 0`` gives the equilateral submanifold. The functions here
assemble both Jacobians at the regular point in closed form and count
their kernel dimension.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConvexityNotGuaranteed
from .geometry import Polygon, regular_polygon


@dataclass(frozen=True)
class JacobianReport:
    n: int
    matrix_rows: int
    matrix_cols: int
    singular_values: tuple
    nullity: int
    rank_tol: float

    @property
    def rank(self):
        return self.matrix_cols - self.nullity

    def to_json(self):
        return {
            "n": self.n,
            "matrix_rows": self.matrix_rows,
            "matrix_cols": self.matrix_cols,
            "singular_values": list(self.singular_values),
            "nullity": self.nullity,
            "rank": self.rank,
            "rank_tol": self.rank_tol,
        }


def _report(n, M, rank_tol):
    s = np.linalg.svd(M, compute_uv=False)
    rank = int(np.sum(s > rank_tol * s[0])) if s.size and s[0] > 0 else 0
    return JacobianReport(n, M.shape[0], M.shape[1], tuple(float(v) for v in s),
                          M.shape[1] - rank, rank_tol)


def _rt(n):
    """The tail sums r_{j,n} = -sum_{k>=j} sin(2 pi k/n), t_{j,n} = sum cos."""
    k = np.arange(n)
    s = np.sin(2 * np.pi * k / n)
    c = np.cos(2 * np.pi * k / n)
    # entry j (1-based, j = 1..n-1) sums k = j..n-1; entry n is 0
    r = np.zeros(n)
    t = np.zeros(n)
    for j in range(1, n):
        r[j - 1] = -s[j:].sum()
        t[j - 1] = c[j:].sum()
    return r, t


def dq_matrix(n):
    """The 4 x 2n matrix DQ(x_*, r_*) = [E | J] at the regular n-gon."""
    r, t = _rt(n)
    ang = 2 * np.pi * np.arange(n) / n
    E = np.vstack([np.ones(n), np.full(n, math.cos(2 * math.pi / n)), r, t])
    J = np.vstack([np.zeros(n), np.full(n, 2 * math.sin(2 * math.pi / n)),
                   np.cos(ang), np.sin(ang)])
    return np.hstack([E, J])


def dpsi_matrix(n):
    """The (n+4) x (2n+1) matrix DPsi(x_*, r_*, s_*) = [N | O]."""
    r, t = _rt(n)
    ang = 2 * np.pi * np.arange(n) / n
    sn = math.sin(2 * math.pi / n)
    w = 2 * (1 - math.cos(2 * math.pi / n))
    N = np.zeros((n + 4, n))
    O = np.zeros((n + 4, n + 1))
    N[0] = 1.0
    for i in range(n):
        N[1 + i, i] = 2 * sn
        O[1 + i, i] = w
        O[1 + i, (i + 1) % n] = w
        O[1 + i, n] = -1.0
    N[n + 1] = math.cos(2 * math.pi / n)
    N[n + 2] = r
    N[n + 3] = t
    O[n + 1, :n] = 2 * sn
    O[n + 2, :n] = np.cos(ang)
    O[n + 3, :n] = np.sin(ang)
    return np.hstack([N, O])


def constraint_map(x, r):
    """Q(x, r) with the area row written as sum r_i r_{i+1} sin x_i."""
    x = np.asarray(x, dtype=float)
    r = np.asarray(r, dtype=float)
    theta = np.concatenate(([0.0], np.cumsum(x[:-1])))
    return np.array([x.sum(), np.sum(r * np.roll(r, -1) * np.sin(x)),
                     np.sum(r * np.cos(theta)), np.sum(r * np.sin(theta))])


def equilateral_map(x, r, s):
    """Psi(x, r, s): angle sum, the n side equations l_i^2 - s, area, centroid."""
    x = np.asarray(x, dtype=float)
    r = np.asarray(r, dtype=float)
    rn = np.roll(r, -1)
    sides = r ** 2 + rn ** 2 - 2 * r * rn * np.cos(x) - s
    q = constraint_map(x, r)
    return np.concatenate(([q[0]], sides, q[1:]))


def dq_at_regular(n, rank_tol=1e-10):
    """Kernel dimension of DQ at the regular n-gon (expected 2n - 4)."""
    if n < 3:
        raise ValueError("n must be >= 3")
    return _report(n, dq_matrix(n), rank_tol)


def dpsi_at_regular(n, rank_tol=1e-10):
    """Kernel dimension of DPsi at the regular n-gon (expected n - 3 for n >= 4).

    For ``n = 3`` the report is still produced but the count carries no
    geometric meaning.
    """
    if n < 3:
        raise ValueError("n must be >= 3")
    return _report(n, dpsi_matrix(n), rank_tol)


def numerical_jacobian(f, z, h=1e-6):
    """Central-difference Jacobian of ``f`` at ``z``."""
    z = np.asarray(z, dtype=float)
    f0 = np.asarray(f(z))
    out = np.empty((f0.size, z.size))
    for j in range(z.size):
        e = np.zeros_like(z)
        e[j] = h
        out[:, j] = (np.asarray(f(z + e)) - np.asarray(f(z - e))) / (2 * h)
    return out


def convexity_radius(n, alpha=None):
    """mu_n: a quarter of the side length of the regular n-gon of area alpha."""
    P = regular_polygon(n, area=alpha)
    return 0.25 * float(P.side_lengths.min())


def sample_near_regular(n, radius, alpha=None, seed=0, count=1, max_tries=100):
    """Random convex n-gons with vertices near those of the regular n-gon.

    Vertices of the regular n-gon of area ``alpha`` (default: unit
    circumradius) are displaced uniformly inside discs of radius
    ``radius / 2``; the result is dilated about its vertex barycenter to
    area exactly ``alpha`` and kept only if every vertex stays within
    ``radius`` of its reference and the polygon is convex.

    When ``radius`` exceeds the convexity radius ``mu_n`` a
    :class:`ConvexityNotGuaranteed` warning is issued; non-convex draws
    are discarded in any case.
    """
    if alpha is None:
        alpha = 0.5 * n * math.sin(2 * math.pi / n)
    ref = regular_polygon(n, area=alpha).vertices
    rng = np.random.default_rng(seed)
    if radius <= 0:
        return [Polygon(ref) for _ in range(count)]
    if radius > convexity_radius(n, alpha):
        warnings.warn(f"radius {radius} exceeds the convexity radius; non-convex samples dropped",
                      ConvexityNotGuaranteed, stacklevel=2)
    out = []
    tries = 0
    while len(out) < count:
        tries += 1
        if tries > max_tries * count:
            raise RuntimeError("could not draw enough admissible samples")
        rho = 0.5 * radius * np.sqrt(rng.random(n))
        phi = rng.uniform(0.0, 2 * np.pi, n)
        V = ref + np.column_stack((rho * np.cos(phi), rho * np.sin(phi)))
        try:
            P = Polygon(V, simplify=False)
        except ValueError:
            continue
        if P.n != n:
            continue
        c = P.barycenter
        s = math.sqrt(alpha / P.area)
        V = c + s * (P.vertices - c)
        if np.max(np.hypot(*(V - ref).T)) > radius:
            continue
        try:
            Q = Polygon(V, simplify=False)
        except ValueError:
            continue
        if Q.n != n or not Q.is_convex():
            continue
        out.append(Q)
    return out
