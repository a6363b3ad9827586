"""Partial Steiner symmetrization of polygons and the resulting flow.

One step takes three consecutive vertices ``v1, v2, v3`` and moves the
middle one onto the perpendicular bisector of ``v1 v3``, keeping its
distance ``xi`` from the line ``v1 v3``.  Triangle ``v1 v2 v3`` keeps its
area, so the polygon does too, while the two sides through ``v2`` become
equal and the perimeter cannot increase.  Repeating the step while the
window slides cyclically around the polygon drives it to an equilateral
polygon.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DegenerateTriangle, DomainError, StepRejected
from .geometry import Polygon, _segments_cross


@dataclass(frozen=True)
class SymmetrizationFrame:
    """Local coordinates attached to the window ``(v1, v2, v3)``.

    Frame coordinates put the midpoint ``m`` of ``v1 v3`` at the origin,
    the ``axis`` (unit normal to ``v1 v3`` on the side of ``v2``) along
    the first coordinate and ``e_up`` along the second. ``e_up`` is
    chosen so that ``v2`` sits at ``(xi, t_star)`` with ``t_star >= 0``;
    the endpoint on the ``+b/2`` side is ``upper_end`` and the other is
    ``lower_end``.  ``y_+`` is the segment ``upper_end -> v2`` and ``y_-``
    the segment ``lower_end -> v2``.
    """

    i: int
    n: int
    v1: np.ndarray
    v2: np.ndarray
    v3: np.ndarray
    m: np.ndarray
    axis: np.ndarray
    e_up: np.ndarray
    xi: float
    b: float
    t_signed: float
    upper_is_v1: bool

    @property
    def t_star(self):
        return abs(self.t_signed)

    @property
    def t(self):
        """Frame offset of ``v2`` along ``e_up`` (may be negative if oriented)."""
        return self.t_signed

    @property
    def v2_star(self):
        return self.m + self.xi * self.axis

    @property
    def upper_end(self):
        return self.v1 if self.upper_is_v1 else self.v3

    @property
    def lower_end(self):
        return self.v3 if self.upper_is_v1 else self.v1

    @property
    def indices(self):
        return self.i % self.n, (self.i + 1) % self.n, (self.i + 2) % self.n

    @property
    def upper_index(self):
        a, _, c = self.indices
        return a if self.upper_is_v1 else c

    @property
    def lower_index(self):
        a, _, c = self.indices
        return c if self.upper_is_v1 else a

    def to_frame(self, pts):
        d = np.asarray(pts, dtype=float) - self.m
        return np.stack((d @ self.axis, d @ self.e_up), axis=-1)

    def from_frame(self, coords):
        c = np.asarray(coords, dtype=float)
        return self.m + c[..., :1] * self.axis + c[..., 1:2] * self.e_up

    def segment(self, side, t=None):
        """Endpoints (fixed end, moving vertex) of ``y_+`` or ``y_-``.

        With ``t`` given, the moving vertex is placed at frame position
        ``(xi, t)`` instead of its actual position.
        """
        v2 = self.v2 if t is None else self.from_frame([self.xi, t])
        if side == "upper":
            return self.upper_end, v2
        if side == "lower":
            return self.lower_end, v2
        raise ValueError("side must be 'upper' or 'lower'")

    def phi(self, t):
        """Perimeter change of the two sides through v2 at offset ``t``."""
        return perimeter_change(t, self.b, self.xi)

    def to_json(self):
        return {"i": self.i, "xi": self.xi, "b": self.b, "t_star": self.t_star,
                "t_signed": self.t_signed, "v1": self.v1.tolist(),
                "v2": self.v2.tolist(), "v3": self.v3.tolist()}


def frame_at(P, i, orient=None):
    """Symmetrization frame of ``P`` for the window starting at vertex ``i``.

    By default ``e_up`` points from the midpoint of ``v1 v3`` towards the
    side ``v2`` is offset to. Passing a vector ``orient`` fixes ``e_up``
    to the direction of ``v1 - v3`` that has a non-negative component
    along ``orient`` instead; ``t_signed`` may then be negative.
    """
    V = P.vertices if isinstance(P, Polygon) else np.asarray(P, dtype=float)
    n = V.shape[0]
    i = i % n
    v1, v2, v3 = V[i].copy(), V[(i + 1) % n].copy(), V[(i + 2) % n].copy()
    b = float(np.hypot(*(v1 - v3)))
    if b == 0.0:
        raise DegenerateTriangle(f"v1 and v3 coincide at window {i}")
    e = (v1 - v3) / b
    m = 0.5 * (v1 + v3)
    nrm = np.array([-e[1], e[0]])
    w = v2 - m
    xi = float(w @ nrm)
    along = float(w @ e)
    if abs(xi) <= 1e-14 * b:
        raise DegenerateTriangle(f"collinear triple at window {i}")
    axis = nrm if xi > 0 else -nrm
    if orient is None:
        upper = along >= 0.0
    else:
        upper = float(np.dot(orient, e)) >= 0.0
    e_up = e if upper else -e
    return SymmetrizationFrame(i, n, v1, v2, v3, m, axis, e_up, abs(xi), b,
                               along if upper else -along, upper)


def perimeter_change(t, b, xi):
    """phi(t) = sqrt((b/2-t)^2+xi^2) + sqrt((b/2+t)^2+xi^2) - 2 sqrt((b/2)^2+xi^2)."""
    h = 0.5 * b
    return (math.hypot(h - t, xi) + math.hypot(h + t, xi) - 2 * math.hypot(h, xi))


def perimeter_change_estimate(t, xi):
    """Small-offset estimate (1/(2 sqrt 2)) xi^(1/2) t^2 of the perimeter drop."""
    return math.sqrt(xi) * t * t / (2 * math.sqrt(2))


def symmetrize_step(P, i):
    """Symmetrize vertex ``i+1`` of ``P`` within the window ``(i, i+1, i+2)``.

    Returns the new polygon and the frame of the *input* window.

    Raises
    ------
    DegenerateTriangle
        If the three vertices are collinear.
    StepRejected
        If the result is not a simple polygon.
    """
    if not isinstance(P, Polygon):
        P = Polygon(P)
    fr = frame_at(P, i)
    V = np.array(P.vertices)
    V[(i + 1) % P.n] = fr.v2_star
    if _segments_cross(V):
        raise StepRejected(f"symmetrizing window {i} self-intersects", step=i)
    return Polygon(V, simplify=False), fr


def _shoelace_many(H):
    x, y = H[..., 0], H[..., 1]
    return 0.5 * np.sum(x * np.roll(y, -1, axis=-1) - np.roll(x, -1, axis=-1) * y, axis=-1)


@dataclass(frozen=True)
class FlowTrace:
    """Record of a symmetrization flow P^1, P^2, ...

    ``offsets[k]`` is the offset ``t`` removed at step ``k`` (zero for a
    skipped step), ``leads[k]`` the first index of its window and
    ``status[k]`` is 0 for an applied step, 1 for a step skipped by the
    convexity/simplicity guard.
    """

    history: np.ndarray
    offsets: np.ndarray
    leads: np.ndarray
    status: np.ndarray
    perimeters: np.ndarray
    areas: np.ndarray
    max_side_dev: np.ndarray
    converged: bool
    iterations_to_converge: int | None
    backend: str = "python"
    meta: dict = field(default_factory=dict)

    @property
    def steps(self):
        return self.offsets.size

    @property
    def polygons(self):
        return [Polygon(v, simple=False, simplify=False) for v in self.history]

    @property
    def final(self):
        return Polygon(self.history[-1], simple=False, simplify=False)

    @property
    def nonzero_offsets(self):
        return self.offsets[self.offsets > 0]

    def area_drift(self):
        return float(np.max(np.abs(self.areas - self.areas[0])) / self.areas[0])

    def side_lengths(self):
        d = np.roll(self.history, -1, axis=1) - self.history
        return np.hypot(d[..., 0], d[..., 1])

    def rows(self):
        """Rows ``(k, t_k, perimeter, area, max_side_dev)``; row 0 has t = nan."""
        out = []
        for k in range(self.history.shape[0]):
            t = float(self.offsets[k - 1]) if k > 0 else math.nan
            out.append((k, t, float(self.perimeters[k]), float(self.areas[k]),
                        float(self.max_side_dev[k])))
        return out


def _side_dev(V):
    d = np.roll(V, -1, axis=0) - V
    l = np.hypot(d[:, 0], d[:, 1])
    mean = l.mean()
    return float(l.sum()), float(np.max(np.abs(l - mean)) / mean)


def run_flow(P, max_iter=1000, tol=1e-8, start=0, schedule="cyclic", backend=None):
    """Iterate ``P^{k+1} = (P^k)^*`` until the polygon is equilateral.

    Parameters
    ----------
    P : Polygon
    max_iter : int
        Maximum number of symmetrization steps.
    tol : float
        Stop once the maximal relative side-length deviation is below this.
    start : int
        Window index of the first step; it advances by one every step.
    schedule : {"cyclic", "largest"}
        ``"largest"`` picks, at every step, the window with the largest
        offset instead of advancing cyclically.
    backend : {None, "python", "cython"}
        Kernel used for the cyclic schedule on convex input.

    Steps that would make a convex polygon non-convex (or any polygon
    non-simple) are skipped; the window still advances.
    """
    if not isinstance(P, Polygon):
        P = Polygon(P)
    V0 = np.array(P.vertices)
    n = V0.shape[0]
    if schedule == "cyclic" and P.is_convex():
        kern = kernels if backend is None else kernels.get_backend(backend)
        name = kernels.BACKEND if backend is None else backend
        (hist, offs, leads, status, per, dev, steps, conv, err,
         err_step) = kern.symmetrize_sweep(V0, int(start) % n, int(max_iter), float(tol), True)
        if err != kernels.ERR_NONE:
            raise DegenerateTriangle(f"collinear window at step {err_step}")
        hist = np.asarray(hist)
        trace = FlowTrace(hist, np.asarray(offs), np.asarray(leads), np.asarray(status),
                          np.asarray(per), _shoelace_many(hist), np.asarray(dev), bool(conv),
                          int(steps) if conv else None, name)
        return trace
    if schedule not in ("cyclic", "largest"):
        raise ValueError(f"unknown schedule {schedule!r}")
    return _run_flow_python(V0, max_iter, tol, start, schedule, P.is_convex())


def _run_flow_python(V, max_iter, tol, start, schedule, convex):
    n = V.shape[0]
    hist = [V.copy()]
    per0, dev0 = _side_dev(V)
    pers, devs = [per0], [dev0]
    offs, leads, status = [], [], []
    converged = dev0 < tol
    i = start % n
    k = 0
    while not converged and k < max_iter:
        if schedule == "largest":
            ts = []
            for j in range(n):
                try:
                    ts.append(frame_at(V, j).t_star)
                except DegenerateTriangle:
                    ts.append(-1.0)
            i = int(np.argmax(ts))
        fr = frame_at(V, i)
        W = V.copy()
        W[(i + 1) % n] = fr.v2_star
        ok = not _segments_cross(W)
        if ok and convex:
            ok = Polygon(W, simple=False, simplify=False).is_convex()
        leads.append(i)
        if ok:
            V = W
            offs.append(fr.t_star)
            status.append(kernels.STATUS_APPLIED)
        else:
            offs.append(0.0)
            status.append(kernels.STATUS_REJECTED)
        hist.append(V.copy())
        p, d = _side_dev(V)
        pers.append(p)
        devs.append(d)
        k += 1
        i = (i + 1) % n
        converged = d < tol
    H = np.array(hist)
    return FlowTrace(H, np.array(offs), np.array(leads, dtype=np.int64),
                     np.array(status, dtype=np.int8), np.array(pers), _shoelace_many(H),
                     np.array(devs), bool(converged), k if converged else None, "python")


@dataclass(frozen=True)
class RateReport:
    """Membership of a trace in the rate set sum_{j>=k} t_j^2 <= a t_{k-1}^2."""

    k: np.ndarray
    ratios: np.ndarray
    members: np.ndarray
    tail_bound: float
    alpha_rate: float

    @property
    def all_members(self):
        return bool(np.all(self.members))


def rate_membership(trace, alpha_rate):
    """Check ``sum_{j>=k} t_j^2 <= alpha_rate * t_{k-1}^2`` for each k.

    Only indices with ``t_{k-1} > 0`` are reported. Tail sums are cut at
    the end of the trace; ``tail_bound`` bounds the missing part through
    the telescoping perimeter drop: each applied step with offset ``t``
    lowers the perimeter by at least ``c t^2`` with ``c`` the smallest
    observed ratio, so the unobserved tail is at most ``L_end - L_inf``
    over ``c``, where ``L_inf`` is taken as the perimeter of the
    equilateral limit (the last one recorded).
    """
    t = np.asarray(trace.offsets, dtype=float)
    t2 = t * t
    tails = np.cumsum(t2[::-1])[::-1]
    ks, ratios = [], []
    for k in range(1, t.size):
        if t[k - 1] > 0:
            ks.append(k)
            ratios.append(tails[k] / t2[k - 1])
    drop = -np.diff(trace.perimeters)
    mask = t > 1e-300
    if np.any(mask) and np.any(drop[mask] > 0):
        c = float(np.min(drop[mask] / t2[mask]))
    else:
        c = math.inf
    tail = 0.0 if not math.isfinite(c) or c <= 0 else max(
        float(trace.perimeters[-1] - np.min(trace.perimeters)), 0.0) / c
    ratios = np.array(ratios)
    return RateReport(np.array(ks, dtype=int), ratios, ratios <= alpha_rate, tail,
                      float(alpha_rate))


def triangle_side_map(s, A):
    """phi(s) = s/4 + 4 A^2 / s acting on squared side lengths of a triangle of area A.

    One symmetrization step turns a triangle whose symmetrized base has
    squared length ``s`` into an isosceles one whose equal sides have
    squared length ``phi(s)``.
    """
    if s <= 0 or A <= 0:
        raise DomainError("s and A must be positive")
    return 0.25 * s + 4.0 * A * A / s


def triangle_side_map_derivative(s, A):
    if s <= 0 or A <= 0:
        raise DomainError("s and A must be positive")
    return 0.25 - 4.0 * A * A / (s * s)


def triangle_fixed_point(A):
    """Squared side 4A/sqrt(3) of the equilateral triangle of area A."""
    return 4.0 * A / math.sqrt(3.0)
