"""Eigenvalue derivatives along a symmetrization step.

Moving the middle vertex ``v2`` of a window along ``e_up`` (its frame
offset ``t``) moves the two sides ``y_+`` and ``y_-`` through it. The
normal velocity on ``y_+`` is ``alpha / sqrt(xi^2 + (b/2 - t)^2)`` and
on ``y_-`` it is ``-alpha / sqrt(xi^2 + (b/2 + t)^2)``, where ``alpha``
is the frame coordinate (0 at the fixed end, ``xi`` at ``v2``). The
Hadamard formula turns this into

    dlambda/dt = int_0^xi (alpha/xi) |grad u(y_-)|^2 - (alpha/xi) |grad u(y_+)|^2 dalpha,

and the second-order expression below is the one used along the flow.
"""

import math
from dataclasses import dataclass, asdict

import numpy as np

from .errors import DomainError, FrameMismatch
from .fem import boundary_gradient_trace, solve_lambda1, triangulate
from .geometry import Polygon
from .symmetrize import frame_at


def velocity_field(frame, side, alpha, t=None):
    """Normal velocity C at frame coordinate ``alpha`` on ``y_+``/``y_-``."""
    if t is None:
        t = frame.t_star
    if not -1e-12 <= alpha <= frame.xi * (1 + 1e-12):
        raise DomainError("alpha must lie in [0, xi]")
    h = 0.5 * frame.b
    if side == "upper":
        return alpha / math.sqrt(frame.xi ** 2 + (h - t) ** 2)
    if side == "lower":
        return -alpha / math.sqrt(frame.xi ** 2 + (h + t) ** 2)
    raise ValueError("side must be 'upper' or 'lower'")


def _integrals(sol, frame, method):
    up = boundary_gradient_trace(sol, frame, "upper", method)
    lo = boundary_gradient_trace(sol, frame, "lower", method)
    return up.integral(1), lo.integral(1)


def dlambda_dt(sol, frame, method="flux"):
    """First derivative of lambda with respect to the offset of ``v2``."""
    iu, il = _integrals(sol, frame, method)
    return (il - iu) / frame.xi


def d2lambda_dt2(sol, frame, t=None, method="flux"):
    """Second derivative along the step, evaluated at offset ``t``.

    ``[2(b/2-t) / (xi (xi^2+(t-b/2)^2))] int alpha |grad u(y_+)|^2
    + [2(b/2+t) / (xi (xi^2+(t+b/2)^2))] int alpha |grad u(y_-)|^2``,
    with the integrals taken on the polygon of ``sol``.
    """
    if t is None:
        t = frame.t_star
    h = 0.5 * frame.b
    if not 0 <= t < h:
        raise DomainError("t must lie in [0, b/2)")
    iu, il = _integrals(sol, frame, method)
    xi = frame.xi
    cu = 2 * (h - t) / (xi * (xi ** 2 + (t - h) ** 2))
    cl = 2 * (h + t) / (xi * (xi ** 2 + (t + h) ** 2))
    return cu * iu + cl * il


def second_derivative_terms(sol, frame, t=None, method="flux"):
    """The two summands of :func:`d2lambda_dt2` separately (upper, lower)."""
    if t is None:
        t = frame.t_star
    h = 0.5 * frame.b
    iu, il = _integrals(sol, frame, method)
    xi = frame.xi
    return (2 * (h - t) / (xi * (xi ** 2 + (t - h) ** 2)) * iu,
            2 * (h + t) / (xi * (xi ** 2 + (t + h) ** 2)) * il)


@dataclass(frozen=True)
class DerivativeReport:
    dlambda_dt: float
    d2lambda_dt2: float
    t_eval: float
    lambda1: float
    fd_dlambda: float = math.nan
    fd_d2lambda: float = math.nan
    rel_err_1: float = math.nan
    rel_err_2: float = math.nan
    diameter: float = math.nan

    def to_json(self):
        return {k: (None if isinstance(v, float) and math.isnan(v) else v)
                for k, v in asdict(self).items()}


def moved_vertex(P, frame, dt):
    """Vertex array of ``P`` with ``v2`` moved by ``dt`` along ``e_up``."""
    V = np.array(P.vertices)
    V[(frame.i + 1) % P.n] = frame.v2 + dt * frame.e_up
    return V


def lambda_along(mesh, frame, offsets):
    """FEM eigenvalues with ``v2`` displaced by each offset, on the transported mesh."""
    P = mesh.polygon
    return np.array([solve_lambda1(mesh.transported(moved_vertex(P, frame, d))).lambda1
                     for d in offsets])


def hadamard_check(P, i, level=6, grade_vertices=True, h1=1e-3, h2=5e-3, method="flux",
                   second=True):
    """Closed-form derivatives of window ``i`` against central differences.

    Step sizes are relative to the diameter. Finite differences use the
    same mesh topology moved with the vertex. Relative errors use the
    denominator ``max(|FD|, 0.1 lambda / diam)`` for the first derivative
    and ``|FD|`` for the second.
    """
    if not isinstance(P, Polygon):
        P = Polygon(P)
    mesh = triangulate(P, level, grade_vertices=grade_vertices)
    sol = solve_lambda1(mesh)
    fr = frame_at(P, i)
    d1 = dlambda_dt(sol, fr, method)
    d2 = d2lambda_dt2(sol, fr, method=method) if fr.t_star < 0.5 * fr.b else math.nan
    diam = P.diameter
    hh = h1 * diam
    lp, lm = lambda_along(mesh, fr, [hh, -hh])
    fd1 = (lp - lm) / (2 * hh)
    fd2 = math.nan
    if second:
        hh2 = h2 * diam
        lp2, lm2 = lambda_along(mesh, fr, [hh2, -hh2])
        fd2 = (lp2 - 2 * sol.lambda1 + lm2) / hh2 ** 2
    den1 = max(abs(fd1), 0.1 * sol.lambda1 / diam)
    e1 = abs(d1 - fd1) / den1
    e2 = abs(d2 - fd2) / abs(fd2) if second and fd2 != 0 else math.nan
    return DerivativeReport(d1, d2, fr.t_star, sol.lambda1, fd1, fd2, e1, e2, diam)


# ---------------------------------------------------------------------------
# rhombus -> rectangle


@dataclass(frozen=True)
class ShearFrame:
    """A parallelogram with two vertical sides of length ``height``.

    Vertices (ccw): ``(0, 0), (xi, t), (xi, t + height), (0, height)``.
    ``t`` is the vertical shear of the right side; ``t = 0`` is the
    ``xi x height`` rectangle. ``y_+`` is the top side and ``y_-`` the
    bottom side, with ``alpha`` the horizontal coordinate in ``[0, xi]``.
    """

    xi: float
    height: float
    t: float

    def polygon(self):
        return Polygon([[0.0, 0.0], [self.xi, self.t], [self.xi, self.t + self.height],
                        [0.0, self.height]], simplify=False)


def shear_frame(P):
    """Recover the shear frame of a parallelogram with two vertical sides."""
    if not isinstance(P, Polygon):
        P = Polygon(P)
    V = P.vertices
    if P.n != 4:
        raise FrameMismatch("a quadrilateral is required")
    for k in range(4):
        W = np.roll(V, -k, axis=0)
        W = W - W[0]
        a, b, c, d = W
        scale = P.diameter
        if (abs(d[0]) < 1e-12 * scale and abs(b[0] - c[0]) < 1e-12 * scale and b[0] > 0
                and abs((c[1] - b[1]) - d[1]) < 1e-10 * scale and d[1] > 0):
            return ShearFrame(float(b[0]), float(d[1]), float(b[1])), k
    raise FrameMismatch("polygon is not a parallelogram with vertical sides")


def _segment_integral(sol, p0, p1, xi):
    """int_0^xi alpha |grad u|^2 d alpha along p0 -> p1 (alpha = x-distance from p0)."""
    from .symmetrize import SymmetrizationFrame
    # a throw-away frame whose upper segment is p0 -> p1
    p0 = np.asarray(p0, float)
    p1 = np.asarray(p1, float)
    fr = SymmetrizationFrame(0, 4, p0, p1, p0, p0, np.array([1.0, 0.0]),
                             np.array([0.0, 1.0]), xi, 0.0, 0.0, True)
    return boundary_gradient_trace(sol, fr, "upper").integral(1)


def rhombus_rectangle_derivatives(P, level=6, sol=None):
    """Derivatives of lambda along the shear family through ``P``.

    For the parallelogram ``(0,0), (xi,t), (xi,t+H), (0,H)`` the right
    side translates vertically, the left side stays fixed, and the top
    and bottom sides rotate about their left end points. Then

        dlambda/dt   = (1/xi) (int alpha |grad u(y_+)|^2 - int alpha |grad u(y_-)|^2)
        d2lambda/dt2 = 2t / (xi (xi^2 + t^2)) * (same difference).
    """
    if not isinstance(P, Polygon):
        P = Polygon(P)
    sf, k = shear_frame(P)
    origin = np.roll(P.vertices, -k, axis=0)[0]
    if sol is None:
        sol = solve_lambda1(triangulate(P, level))
    # the mesh polygon may be rotated/translated only by the roll
    top0 = origin + np.array([0.0, sf.height])
    top1 = origin + np.array([sf.xi, sf.t + sf.height])
    bot0 = origin
    bot1 = origin + np.array([sf.xi, sf.t])
    iu = _segment_integral(sol, top0, top1, sf.xi)
    il = _segment_integral(sol, bot0, bot1, sf.xi)
    d1 = (iu - il) / sf.xi
    d2 = 2 * sf.t / (sf.xi * (sf.xi ** 2 + sf.t ** 2)) * (iu - il)
    return DerivativeReport(d1, d2, sf.t, sol.lambda1, diameter=P.diameter)
