"""Closed-form eigenvalues and the flow series for lambda(P).

Along the symmetrization flow ``P^1 -> P^2 -> ... -> P^inf`` each step
moves one vertex from offset ``t_k`` to 0, so telescoping gives

    lambda(P) = lambda(P^inf) + sum_k alpha_k t_k + sum_k beta_k t_k^2 / 2

with ``alpha_k`` the first derivative at the symmetric position and
``beta_k`` the second derivative at an intermediate offset.
:func:`reconstruct_series` evaluates the truncated series with FEM
eigenfunctions on a mesh transported along the flow.
"""

import math
from dataclasses import dataclass, asdict

import numpy as np

from .errors import NoConvergence
from .fem import boundary_gradient_trace, solve_lambda1, triangulate
from .geometry import Polygon
from .shape_derivatives import d2lambda_dt2, dlambda_dt
from .symmetrize import frame_at, run_flow


def rectangle_lambda(L, l):
    """First Dirichlet eigenvalue pi^2 (1/L^2 + 1/l^2) of an L x l rectangle."""
    if L <= 0 or l <= 0:
        raise ValueError("side lengths must be positive")
    return math.pi ** 2 * (1.0 / L ** 2 + 1.0 / l ** 2)


def equilateral_triangle_lambda(A):
    """First Dirichlet eigenvalue 4 pi^2 / (A sqrt 3) of the equilateral triangle of area A."""
    if A <= 0:
        raise ValueError("area must be positive")
    return 4 * math.pi ** 2 / (A * math.sqrt(3.0))


DISK_FREQUENCY = 2.404825557695773  # first zero of J0


def disk_lambda(area):
    """First Dirichlet eigenvalue j_{0,1}^2 pi / area of a disk."""
    return DISK_FREQUENCY ** 2 * math.pi / area


@dataclass(frozen=True)
class SeriesReconstruction:
    lambda_limit: float
    direct_lambda: float
    alpha_terms: np.ndarray
    beta_terms: np.ndarray
    t_sequence: np.ndarray
    steps: np.ndarray
    partial_sums: np.ndarray
    rel_gap: np.ndarray
    tail_t2: float
    n_terms: int
    flow_steps: int

    @property
    def lambda_rec(self):
        return float(self.partial_sums[-1]) if self.partial_sums.size else self.lambda_limit

    @property
    def final_gap(self):
        return abs(self.lambda_rec - self.direct_lambda) / self.direct_lambda

    def rows(self):
        return [(int(k), float(t), float(a), float(b), float(s)) for k, t, a, b, s in
                zip(self.steps, self.t_sequence, self.alpha_terms, self.beta_terms,
                    self.partial_sums)]

    def to_json(self):
        d = {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in asdict(self).items()}
        d["lambda_rec"] = self.lambda_rec
        d["final_gap"] = self.final_gap
        return d


def _at_offset(mesh, P_after, frame_before, i, t):
    """Polygon P_after with vertex i+1 moved back by t along the frame's e_up."""
    V = np.array(P_after.vertices)
    fr0 = frame_at(V, i, orient=frame_before.e_up)
    V[(i + 1) % V.shape[0]] = fr0.v2 + t * fr0.e_up
    return V


def reconstruct_series(P, K=50, refine=6, max_iter=2000, tol=1e-8, grade_vertices=False,
                       flow=None, mesh=None):
    """Truncated series for lambda(P) along the symmetrization flow.

    For every applied step ``k`` (up to ``K`` of them) with offset
    ``t = t_{k-1}``:

    * ``alpha_k`` is dlambda/dt on ``P^{k+1}`` (symmetric window, t = 0),
      oriented towards the side ``v2`` came from;
    * ``beta_k`` is d2lambda/dt2 evaluated on the polygon with ``v2`` at
      offset ``t/2``, the midpoint standing in for the unknown
      mean-value point.

    All eigenpairs are computed on the mesh of ``P`` transported along
    the flow, and ``lambda(P^inf)`` on the same mesh.
    """
    if not isinstance(P, Polygon):
        P = Polygon(P)
    trace = flow if flow is not None else run_flow(P, max_iter=max_iter, tol=tol)
    if not trace.converged:
        raise NoConvergence("symmetrization flow did not converge")
    base = mesh if mesh is not None else triangulate(P, refine, grade_vertices=grade_vertices)
    direct = solve_lambda1(base).lambda1
    lam_inf = solve_lambda1(base.transported(trace.history[-1])).lambda1
    applied = np.flatnonzero((trace.status == 0) & (trace.offsets > 0))
    use = applied[:K]
    alphas, betas, ts = [], [], []
    for k in use:
        i = int(trace.leads[k])
        before = trace.history[k]
        after = trace.history[k + 1]
        fb = frame_at(before, i)
        t = fb.t_star
        mesh_after = base.transported(after)
        sol = solve_lambda1(mesh_after)
        fa = frame_at(mesh_after.polygon, i, orient=fb.e_up)
        a = dlambda_dt(sol, fa)
        mid = _at_offset(base, mesh_after.polygon, fb, i, 0.5 * t)
        mesh_mid = base.transported(mid)
        sol_mid = solve_lambda1(mesh_mid)
        fm = frame_at(mesh_mid.polygon, i, orient=fb.e_up)
        b = d2lambda_dt2(sol_mid, fm, t=fm.t)
        alphas.append(a)
        betas.append(b)
        ts.append(t)
    alphas = np.array(alphas)
    betas = np.array(betas)
    ts = np.array(ts)
    terms = alphas * ts + 0.5 * betas * ts ** 2
    partial = lam_inf + np.cumsum(terms)
    rest = applied[K:]
    tail = float(np.sum(trace.offsets[rest] ** 2))
    return SeriesReconstruction(lam_inf, direct, alphas, betas, ts, use + 1, partial,
                                np.abs(partial - direct) / direct, tail, int(use.size),
                                int(trace.steps))


@dataclass(frozen=True)
class IsoscelesExpansion:
    t: float
    alpha_1: float
    lambda_iso: float
    quick_bound: float
    labels: tuple
    b: float
    rho: float

    def to_json(self):
        return asdict(self)


def label_triangle(T):
    """Vertex indices ``(A, B, C)`` with sides ``c = |AB| <= a = |BC| <= b = |AC|``.

    Ties are resolved by vertex order.
    """
    V = T.vertices
    best = None
    for A in range(3):
        for B in range(3):
            if B == A:
                continue
            C = 3 - A - B
            c = np.hypot(*(V[A] - V[B]))
            a = np.hypot(*(V[B] - V[C]))
            b = np.hypot(*(V[A] - V[C]))
            tol = 1e-12 * max(a, b, c)
            if c <= a + tol and a <= b + tol:
                key = (A, B, C)
                if best is None or key < best:
                    best = key
    return best


def isosceles_expansion_coefficient(T, refine=6, grade_vertices=False):
    """Offset ``t`` and coefficient ``alpha_1`` of the isosceles expansion.

    ``t = b/2 - (AB . AC)/b`` locates the foot of ``B`` relative to the
    midpoint of the longest side ``AC``; ``T_iso`` is ``T`` with ``B``
    symmetrized, and

        alpha_1 = b^2 / (rho ((b/2)^2 + (2 rho/b)^2)) int_0^{2 rho/b} alpha |grad u(y_+)|^2

    with ``u`` the eigenfunction of ``T_iso``. The integral is averaged
    over the two (mirror) sides.
    """
    if not isinstance(T, Polygon):
        T = Polygon(T)
    if T.n != 3:
        raise ValueError("a triangle is required")
    A, B, C = label_triangle(T)
    V = T.vertices
    AB, AC = V[B] - V[A], V[C] - V[A]
    b = float(np.hypot(*AC))
    rho = T.area
    t = 0.5 * b - float(AB @ AC) / b
    # window (A, B, C) in polygon order
    order = [A, B, C]
    # rotate to a ccw window start such that its middle vertex is B
    i = (B - 1) % 3
    fr = frame_at(T, i)
    Viso = np.array(V)
    Viso[B] = fr.v2_star
    Tiso = Polygon(Viso, simplify=False)
    sol = solve_lambda1(triangulate(Tiso, refine, grade_vertices=grade_vertices))
    fi = frame_at(Tiso, i)
    up = boundary_gradient_trace(sol, fi, "upper")
    lo = boundary_gradient_trace(sol, fi, "lower")
    I = 0.5 * (up.integral(1) + lo.integral(1))
    xi = 2 * rho / b
    alpha_1 = b ** 2 / (rho * ((0.5 * b) ** 2 + xi ** 2)) * I
    g = max(up.sup(), lo.sup())
    bound = g ** 2 * 2 * rho / ((0.5 * b) ** 2 + xi ** 2)
    return IsoscelesExpansion(t, alpha_1, sol.lambda1, bound, tuple(order), b, rho)
