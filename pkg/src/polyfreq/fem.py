"""First Dirichlet eigenpair of the Laplacian on polygons with P1 elements.

Meshes are produced by a coarse triangulation (a fan from the vertex
barycenter for convex polygons, ear clipping otherwise) followed by red
refinement. Every mesh node is a fixed linear combination of the polygon
vertices (``Mesh.coarse_weights``), so a mesh can be *transported* to a
nearby polygon with the same number of vertices: same connectivity, moved
nodes. Finite-difference checks of shape derivatives rely on this.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import FrameMismatch, InvalidPolygon, NoConvergence, SolverError
from .geometry import Polygon, _signed_area


# ---------------------------------------------------------------------------
# meshes


@dataclass(frozen=True)
class Mesh:
    """A conforming triangle mesh of a polygon.

    ``boundary_edges`` are node pairs oriented along the (counterclockwise)
    boundary; ``edge_tags[k]`` is the polygon side that edge ``k`` lies on
    (side ``j`` joins polygon vertices ``j`` and ``j+1``).
    ``coarse_weights`` is a sparse ``(n_nodes, n_vertices)`` matrix with
    ``nodes = coarse_weights @ polygon.vertices``.
    """

    nodes: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    edge_tags: np.ndarray
    refinement_level: int
    polygon: Polygon
    coarse_weights: sp.csr_matrix
    vertex_nodes: np.ndarray
    graded: bool = False
    kind: str = "fan"

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    @property
    def n_triangles(self):
        return self.triangles.shape[0]

    @property
    def boundary_nodes(self):
        return np.unique(self.boundary_edges)

    @property
    def interior_nodes(self):
        mask = np.ones(self.n_nodes, dtype=bool)
        mask[self.boundary_nodes] = False
        return np.flatnonzero(mask)

    def triangle_areas(self):
        p = self.nodes[self.triangles]
        return 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                      - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))

    def h_max(self):
        p = self.nodes[self.triangles]
        e = np.concatenate([p[:, 1] - p[:, 0], p[:, 2] - p[:, 1], p[:, 0] - p[:, 2]])
        return float(np.hypot(e[:, 0], e[:, 1]).max())

    def transported(self, vertices):
        """The same mesh moved onto a polygon with vertices ``vertices``.

        ``vertices`` must list the same number of points in the same
        order as ``self.polygon.vertices``.
        """
        V = np.asarray(vertices, dtype=float)
        if V.shape != self.polygon.vertices.shape:
            raise ValueError("vertex array does not match the mesh polygon")
        P = Polygon(V, simple=False, simplify=False)
        if not np.allclose(P.vertices, V):
            raise ValueError("transport target must be counterclockwise")
        nodes = np.asarray(self.coarse_weights @ V)
        m = Mesh(nodes, self.triangles, self.boundary_edges, self.edge_tags,
                 self.refinement_level, P, self.coarse_weights, self.vertex_nodes,
                 self.graded, self.kind)
        if np.any(m.triangle_areas() <= 0):
            raise InvalidPolygon("transported mesh has inverted triangles")
        return m


def _fan(V):
    n = V.shape[0]
    nodes = np.vstack([V, V.mean(axis=0)])
    W = np.vstack([np.eye(n), np.full((1, n), 1.0 / n)])
    tris = np.array([[n, i, (i + 1) % n] for i in range(n)], dtype=np.int64)
    return nodes, tris, W


def _ear_clip(V):
    n = V.shape[0]
    idx = list(range(n))
    tris = []

    def convex(a, b, c):
        return (V[b, 0] - V[a, 0]) * (V[c, 1] - V[a, 1]) - (V[b, 1] - V[a, 1]) * (V[c, 0] - V[a, 0]) > 0

    def inside(p, a, b, c):
        d1 = (V[b, 0] - V[a, 0]) * (p[1] - V[a, 1]) - (V[b, 1] - V[a, 1]) * (p[0] - V[a, 0])
        d2 = (V[c, 0] - V[b, 0]) * (p[1] - V[b, 1]) - (V[c, 1] - V[b, 1]) * (p[0] - V[b, 0])
        d3 = (V[a, 0] - V[c, 0]) * (p[1] - V[c, 1]) - (V[a, 1] - V[c, 1]) * (p[0] - V[c, 0])
        return d1 >= 0 and d2 >= 0 and d3 >= 0

    guard = 0
    while len(idx) > 3:
        guard += 1
        if guard > 10 * n * n:
            raise InvalidPolygon("ear clipping failed")
        m = len(idx)
        best = None
        for k in range(m):
            a, b, c = idx[k - 1], idx[k], idx[(k + 1) % m]
            if not convex(a, b, c):
                continue
            if any(inside(V[j], a, b, c) for j in idx if j not in (a, b, c)):
                continue
            # prefer the fattest ear
            p = V[[a, b, c]]
            e = np.roll(p, -1, axis=0) - p
            ar = 0.5 * abs(e[0, 0] * e[1, 1] - e[0, 1] * e[1, 0])
            q = ar / max((e ** 2).sum(), 1e-300)
            if best is None or q > best[0]:
                best = (q, k, (a, b, c))
        if best is None:
            raise InvalidPolygon("ear clipping found no ear")
        tris.append(best[2])
        del idx[best[1]]
    tris.append(tuple(idx))
    return V.copy(), np.array(tris, dtype=np.int64), np.eye(n)


def _edges_of(tris):
    e = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    key = np.sort(e, axis=1)
    uniq, inv = np.unique(key, axis=0, return_inverse=True)
    inv = inv.reshape(3, -1).T  # (T, 3): edge ids of (a,b), (b,c), (c,a)
    return uniq, inv


def _refine(nodes, tris, W, bedges, btags, marked_edges=None):
    """Red-green refinement of the triangles touching the marked edges.

    ``marked_edges`` is a boolean mask over the unique edges (all edges
    when ``None``). Triangles with two marked edges are upgraded to red,
    so the result is conforming.
    """
    edges, tedge = _edges_of(tris)
    mark = np.ones(len(edges), dtype=bool) if marked_edges is None else marked_edges.copy()
    while True:
        cnt = mark[tedge].sum(axis=1)
        up = cnt == 2
        if not np.any(up):
            break
        mark[tedge[up].ravel()] = True
    ids = np.flatnonzero(mark)
    mid_index = np.full(len(edges), -1, dtype=np.int64)
    mid_index[ids] = nodes.shape[0] + np.arange(ids.size)
    S = sp.csr_matrix((np.full(2 * ids.size, 0.5),
                       (np.repeat(np.arange(ids.size), 2), edges[ids].ravel())),
                      shape=(ids.size, nodes.shape[0]))
    new_nodes = np.vstack([nodes, S @ nodes])
    new_W = sp.vstack([W, S @ W]).tocsr()

    cnt = mark[tedge].sum(axis=1)
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    mab, mbc, mca = (mid_index[tedge[:, 0]], mid_index[tedge[:, 1]], mid_index[tedge[:, 2]])
    out = [tris[cnt == 0]]
    r = cnt == 3
    out += [np.column_stack(x) for x in (
        (a[r], mab[r], mca[r]), (mab[r], b[r], mbc[r]),
        (mca[r], mbc[r], c[r]), (mab[r], mbc[r], mca[r]))]
    g = cnt == 1
    g0 = g & (mab >= 0)
    g1 = g & (mbc >= 0)
    g2 = g & (mca >= 0)
    out += [np.column_stack((a[g0], mab[g0], c[g0])), np.column_stack((mab[g0], b[g0], c[g0])),
            np.column_stack((a[g1], b[g1], mbc[g1])), np.column_stack((a[g1], mbc[g1], c[g1])),
            np.column_stack((a[g2], b[g2], mca[g2])), np.column_stack((mca[g2], b[g2], c[g2]))]
    new_tris = np.concatenate(out).astype(np.int64)

    # boundary edges
    lookup = {tuple(e): k for k, e in enumerate(edges)}
    nb, nt = [], []
    for (p, q), tag in zip(bedges, btags):
        k = lookup[(min(p, q), max(p, q))]
        mnode = mid_index[k]
        if mnode >= 0:
            nb += [(p, mnode), (mnode, q)]
            nt += [tag, tag]
        else:
            nb.append((p, q))
            nt.append(tag)
    return (new_nodes, new_tris, new_W, np.array(nb, dtype=np.int64),
            np.array(nt, dtype=np.int64))


def _grade(nodes, tris, W, bedges, btags, vertex_nodes, rings):
    for _ in range(rings):
        edges, tedge = _edges_of(tris)
        touch = np.isin(tris, vertex_nodes).any(axis=1)
        mark = np.zeros(len(edges), dtype=bool)
        mark[tedge[touch].ravel()] = True
        nodes, tris, W, bedges, btags = _refine(nodes, tris, W, bedges, btags, mark)
    return nodes, tris, W, bedges, btags


def triangulate(P, level=0, method="auto", grade_vertices=False, rings=2):
    """Triangulate ``P`` and red-refine it ``level`` times.

    Parameters
    ----------
    P : Polygon
    level : int
        Number of uniform red refinements; each multiplies the triangle
        count by 4 and halves the mesh size.
    method : {"auto", "fan", "ear"}
        Coarse triangulation. ``"auto"`` uses the barycentric fan for
        convex polygons and ear clipping otherwise.
    grade_vertices : bool
        Add ``rings`` rounds of local refinement around polygon vertices.
    """
    if not isinstance(P, Polygon):
        P = Polygon(P)
    V = np.array(P.vertices)
    n = V.shape[0]
    if method == "auto":
        method = "fan" if P.is_convex() else "ear"
    if method == "fan":
        nodes, tris, Wd = _fan(V)
    elif method == "ear":
        nodes, tris, Wd = _ear_clip(V)
    else:
        raise ValueError(f"unknown method {method!r}")
    W = sp.csr_matrix(Wd)
    bedges = np.array([(i, (i + 1) % n) for i in range(n)], dtype=np.int64)
    btags = np.arange(n, dtype=np.int64)
    for _ in range(level):
        nodes, tris, W, bedges, btags = _refine(nodes, tris, W, bedges, btags)
    vertex_nodes = np.arange(n)
    if grade_vertices:
        nodes, tris, W, bedges, btags = _grade(nodes, tris, W, bedges, btags, vertex_nodes, rings)
    return Mesh(nodes, tris, bedges, btags, level, P, W, vertex_nodes, bool(grade_vertices), method)


def triangulate_thin_triangle(T, level=6, columns=None, rows=None):
    """Structured column mesh for long, thin triangles.

    The longest side is the base; the foot of the opposite altitude
    splits the triangle into two right triangles, each covered by
    columns perpendicular to the base with ``rows`` cells per column.
    All triangles are close to right-angled, which avoids the large
    angles a barycentric fan produces on needle-like shapes. Node
    positions are fixed barycentric combinations of the three vertices,
    so the mesh can be transported like the others.
    """
    if not isinstance(T, Polygon):
        T = Polygon(T)
    if T.n != 3:
        raise ValueError("a triangle is required")
    V = np.array(T.vertices)
    L = T.side_lengths
    j = int(np.argmax(L))  # base from V[j] to V[j+1]
    A, B, C = V[j], V[(j + 1) % 3], V[(j + 2) % 3]
    base = B - A
    blen = float(np.hypot(*base))
    s_foot = float((C - A) @ base) / blen ** 2  # foot parameter in [0, 1]
    rows = rows if rows is not None else max(2, 2 ** max(level - 2, 1))
    if columns is None:
        aspect = blen / (2 * T.area / blen)
        columns = int(min(max(2 ** level, 4 * rows * aspect / 4), 4096))
    # column parameters along the base, with the foot included exactly
    nl = max(2, int(round(columns * s_foot)))
    nr = max(2, columns - nl)
    s = np.concatenate([np.linspace(0.0, s_foot, nl + 1), np.linspace(s_foot, 1.0, nr + 1)[1:]])
    # height fraction of the column at s (0 at the base end points)
    hfrac = np.where(s <= s_foot, s / s_foot if s_foot > 0 else 1.0,
                     (1 - s) / (1 - s_foot) if s_foot < 1 else 1.0)
    # barycentric weights: point = A + s*base + k/rows * hfrac * (C - F), F = A + s_foot*base
    bary = []
    col_nodes = []
    for sc, hc in zip(s, hfrac):
        m = 1 if hc <= 0 else rows + 1
        ids = []
        for k in range(m):
            f = k / rows * hc
            # A + sc*(B-A) + f*(C - A - s_foot*(B-A))
            wB = sc - f * s_foot
            wC = f
            wA = 1.0 - wB - wC
            ids.append(len(bary))
            bary.append((wA, wB, wC))
        col_nodes.append(ids)
    bary = np.array(bary)
    tris = []
    for c in range(len(s) - 1):
        left, right = col_nodes[c], col_nodes[c + 1]
        if len(left) == 1:
            for k in range(rows):
                tris.append((left[0], right[k], right[k + 1]))
        elif len(right) == 1:
            for k in range(rows):
                tris.append((left[k], right[0], left[k + 1]))
        else:
            for k in range(rows):
                a, b, cc, d = left[k], right[k], right[k + 1], left[k + 1]
                tris.append((a, b, cc))
                tris.append((a, cc, d))
    tris = np.array(tris, dtype=np.int64)
    # weights w.r.t. the polygon's own vertex order
    Wd = np.zeros((bary.shape[0], 3))
    Wd[:, j] = bary[:, 0]
    Wd[:, (j + 1) % 3] = bary[:, 1]
    Wd[:, (j + 2) % 3] = bary[:, 2]
    nodes = Wd @ V
    # orientation fix (base direction may make the columns clockwise)
    p = nodes[tris]
    ar = ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
          - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
    flip = ar < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    vnode = {j: col_nodes[0][0], (j + 1) % 3: col_nodes[-1][0], (j + 2) % 3: col_nodes[nl][-1]}
    bed, tag = _orient_boundary(nodes, tris, V)
    vertex_nodes = np.array([vnode[0], vnode[1], vnode[2]], dtype=np.int64)
    return Mesh(nodes, tris, bed, tag, level, T, sp.csr_matrix(Wd), vertex_nodes, False, "columns")


def _orient_boundary(nodes, tris, V):
    """Boundary edges of a triangle mesh, oriented ccw and tagged by polygon side."""
    e = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    key = np.sort(e, axis=1)
    uniq, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    once = counts[inv.ravel()] == 1
    bed = e[once]  # orientation inherited from ccw triangles
    n = V.shape[0]
    mids = 0.5 * (nodes[bed[:, 0]] + nodes[bed[:, 1]])
    d = np.empty((bed.shape[0], n))
    for s in range(n):
        a, b = V[s], V[(s + 1) % n]
        t = b - a
        d[:, s] = np.abs((mids - a) @ np.array([-t[1], t[0]])) / np.hypot(*t)
    return bed.astype(np.int64), np.argmin(d, axis=1).astype(np.int64)


def check_conformity(mesh, tol=1e-12):
    """Validate a mesh; returns a list of problems (empty when valid)."""
    problems = []
    if np.any(mesh.triangle_areas() <= 0):
        problems.append("non-positive triangle area")
    t = mesh.triangles
    e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    key = np.sort(e, axis=1)
    uniq, counts = np.unique(key, axis=0, return_counts=True)
    if np.any(counts > 2):
        problems.append("edge shared by more than two triangles")
    bkey = {tuple(x) for x in uniq[counts == 1]}
    mk = {tuple(sorted(x)) for x in mesh.boundary_edges}
    if bkey != mk:
        problems.append("boundary edges do not match the mesh boundary")
    # boundary edges lie on their polygon sides
    V = mesh.polygon.vertices
    n = V.shape[0]
    scale = mesh.polygon.diameter
    for (p, q), s in zip(mesh.boundary_edges, mesh.edge_tags):
        a, b = V[s], V[(s + 1) % n]
        tt = (b - a) / np.hypot(*(b - a))
        for node in (p, q):
            off = abs((mesh.nodes[node] - a) @ np.array([-tt[1], tt[0]]))
            if off > tol * max(scale, 1.0) * 1e3:
                problems.append(f"boundary node {node} off polygon side {s}")
                return problems
    total = np.sum(mesh.triangle_areas())
    if abs(total - mesh.polygon.area) > 1e-9 * mesh.polygon.area:
        problems.append("mesh area differs from polygon area")
    return problems


# ---------------------------------------------------------------------------
# assembly and eigen solve


def assemble(mesh):
    """Global P1 stiffness and consistent mass matrices (all nodes)."""
    p = mesh.nodes[mesh.triangles]
    x, y = p[..., 0], p[..., 1]
    # gradients of barycentric coordinates
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    area = 0.5 * (b[:, 0] * c[:, 1] - b[:, 1] * c[:, 0])
    if np.any(area <= 0):
        raise InvalidPolygon("mesh has non-positive triangles")
    Ke = (b[:, :, None] * b[:, None, :] + c[:, :, None] * c[:, None, :]) / (4 * area[:, None, None])
    Me = (area[:, None, None] / 12.0) * (np.ones((3, 3)) + np.eye(3))[None]
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    N = mesh.n_nodes
    K = sp.csr_matrix((Ke.ravel(), (rows, cols)), shape=(N, N))
    M = sp.csr_matrix((Me.ravel(), (rows, cols)), shape=(N, N))
    return K, M


@dataclass(frozen=True)
class EigenSolution:
    """First Dirichlet eigenpair on a mesh.

    ``u`` holds interior nodal values (boundary values are zero) with
    ``u^T M u = 1`` and ``u > 0`` at the interior node nearest the vertex
    barycenter. ``residual`` is ``||K u - lambda M u|| / ||u||``.
    """

    lambda1: float
    u: np.ndarray
    mesh: Mesh
    residual: float
    interior: np.ndarray
    iterations: int
    method: str
    K: sp.csr_matrix = field(repr=False, default=None)
    M: sp.csr_matrix = field(repr=False, default=None)

    @property
    def ndof(self):
        return self.u.size

    @property
    def u_full(self):
        out = np.zeros(self.mesh.n_nodes)
        out[self.interior] = self.u
        return out

    def rayleigh_quotient(self):
        uf = self.u_full
        return float(uf @ (self.K @ uf)) / float(uf @ (self.M @ uf))

    def to_json(self):
        return {"lambda1": self.lambda1, "ndof": int(self.ndof), "residual": self.residual,
                "iterations": self.iterations, "method": self.method,
                "refinement_level": self.mesh.refinement_level,
                "n_triangles": int(self.mesh.n_triangles)}


def _finish(lam, u, mesh, Kii, Mii, interior, iters, method, K, M):
    u = u / math.sqrt(float(u @ (Mii @ u)))
    c = mesh.polygon.barycenter
    d = np.hypot(*(mesh.nodes[interior] - c).T)
    if u[np.argmin(d)] < 0:
        u = -u
    lam = float(u @ (Kii @ u))  # u^T M u = 1
    res = float(np.linalg.norm(Kii @ u - lam * (Mii @ u)) / np.linalg.norm(u))
    return EigenSolution(lam, u, mesh, res, interior, iters, method, K, M)


def solve_lambda1(mesh, tol=1e-10, max_iter=200, rq_switch=1e-4):
    """Smallest eigenpair of ``K u = lambda M u`` with Dirichlet conditions.

    Inverse iteration with shift 0 runs until the relative residual is
    below ``rq_switch``; the operator is then refactored once at the
    current Rayleigh quotient, which converges in a few steps. A
    shift-invert Lanczos solve is used if either stage stalls.
    """
    K, M = assemble(mesh)
    interior = mesh.interior_nodes
    if interior.size == 0:
        raise SolverError("mesh has no interior nodes")
    Kii = K[interior][:, interior].tocsc()
    Mii = M[interior][:, interior].tocsc()
    try:
        lu = spla.splu(Kii)
    except RuntimeError as exc:  # singular factor
        raise SolverError(f"stiffness factorization failed: {exc}") from exc

    def rel_res(lam, x):
        Mx = Mii @ x
        return float(np.linalg.norm(Kii @ x - lam * Mx) / (abs(lam) * np.linalg.norm(Mx)))

    x = np.ones(interior.size)
    lam = float(x @ (Kii @ x)) / float(x @ (Mii @ x))
    it = 0
    res = rel_res(lam, x)
    while res > rq_switch and it < max_iter:
        x = lu.solve(Mii @ x)
        x /= math.sqrt(float(x @ (Mii @ x)))
        lam = float(x @ (Kii @ x))
        res = rel_res(lam, x)
        it += 1
    method = "inverse"
    if res > rq_switch:
        return _lanczos(mesh, K, M, Kii, Mii, interior, it)
    if res > tol:
        method = "inverse+rq"
        try:
            lu2 = spla.splu((Kii - lam * Mii).tocsc())
        except RuntimeError:
            lu2 = None
        if lu2 is not None:
            for _ in range(10):
                y = lu2.solve(Mii @ x)
                if not np.all(np.isfinite(y)):
                    break
                x = y / math.sqrt(float(y @ (Mii @ y)))
                lam = float(x @ (Kii @ x))
                res = rel_res(lam, x)
                it += 1
                if res <= tol:
                    break
        while res > tol and it < max_iter:
            x = lu.solve(Mii @ x)
            x /= math.sqrt(float(x @ (Mii @ x)))
            lam = float(x @ (Kii @ x))
            res = rel_res(lam, x)
            it += 1
    if res > tol:
        return _lanczos(mesh, K, M, Kii, Mii, interior, it)
    return _finish(lam, x, mesh, Kii, Mii, interior, it, method, K, M)


def _lanczos(mesh, K, M, Kii, Mii, interior, it):
    try:
        vals, vecs = spla.eigsh(Kii, k=1, M=Mii, sigma=0.0, which="LM", tol=1e-12)
    except Exception as exc:  # ArpackNoConvergence and friends
        raise NoConvergence(f"eigen solver did not converge: {exc}") from exc
    return _finish(float(vals[0]), vecs[:, 0], mesh, Kii, Mii, interior, it, "lanczos", K, M)


def eigen(P, level=6, grade_vertices=False, method="auto"):
    """Convenience wrapper: triangulate ``P`` and solve."""
    return solve_lambda1(triangulate(P, level, method=method, grade_vertices=grade_vertices))


def order_estimate(lams):
    """Observed convergence order from eigenvalues on three successive levels."""
    l0, l1, l2 = lams[-3:]
    d1, d2 = l0 - l1, l1 - l2
    if d1 <= 0 or d2 <= 0:
        return math.nan
    return math.log2(d1 / d2)


# ---------------------------------------------------------------------------
# boundary traces


@dataclass(frozen=True)
class BoundaryTrace:
    """|grad u| sampled along a boundary segment.

    ``alpha`` is the frame coordinate running from 0 at the fixed end of
    the segment to ``xi`` at the moving vertex. Nodal values
    (``alpha_nodes``, ``g_nodes``) come from the weak boundary flux and
    are piecewise linear in ``alpha``; element values (``alpha_mid``,
    ``g_mid``, ``weights``) are the constant gradient of the triangle
    adjacent to each sub-edge, reported at its midpoint with its
    ``alpha``-length as quadrature weight.
    """

    side: str
    xi: float
    alpha_nodes: np.ndarray
    g_nodes: np.ndarray
    alpha_mid: np.ndarray
    g_mid: np.ndarray
    weights: np.ndarray
    method: str

    def integral(self, power=1):
        """int_0^xi alpha^power |grad u|^2 d alpha."""
        if self.method == "element":
            return float(np.sum(self.weights * self.alpha_mid ** power * self.g_mid ** 2))
        # exact for the piecewise-linear g: 3-point Gauss on each piece
        gp = np.array([-math.sqrt(0.6), 0.0, math.sqrt(0.6)])
        gw = np.array([5.0, 8.0, 5.0]) / 9.0
        a0, a1 = self.alpha_nodes[:-1], self.alpha_nodes[1:]
        g0, g1 = self.g_nodes[:-1], self.g_nodes[1:]
        tot = 0.0
        for p, w in zip(gp, gw):
            s = 0.5 * (1 + p)
            a = a0 + s * (a1 - a0)
            g = g0 + s * (g1 - g0)
            tot += np.sum(0.5 * w * (a1 - a0) * a ** power * g * g)
        return float(tot)

    def sup(self):
        return float(max(np.max(np.abs(self.g_nodes)), np.max(np.abs(self.g_mid))))


def _boundary_flux(sol):
    """Nodal normal derivative on the boundary from the weak residual."""
    if getattr(sol, "_flux", None) is not None:
        return sol._flux
    mesh = sol.mesh
    uf = sol.u_full
    q = sol.K @ uf - sol.lambda1 * (sol.M @ uf)
    bn = mesh.boundary_nodes
    pos = np.full(mesh.n_nodes, -1, dtype=np.int64)
    pos[bn] = np.arange(bn.size)
    e = mesh.boundary_edges
    d = mesh.nodes[e[:, 1]] - mesh.nodes[e[:, 0]]
    le = np.hypot(d[:, 0], d[:, 1])
    i, j = pos[e[:, 0]], pos[e[:, 1]]
    rows = np.concatenate([i, j, i, j])
    cols = np.concatenate([i, j, j, i])
    vals = np.concatenate([le / 3, le / 3, le / 6, le / 6])
    Mb = sp.csc_matrix((vals, (rows, cols)), shape=(bn.size, bn.size))
    g = spla.spsolve(Mb, q[bn])
    flux = np.zeros(mesh.n_nodes)
    flux[bn] = g
    object.__setattr__(sol, "_flux", flux)
    return flux


def _segment_edges(mesh, p0, p1, rel_tol=1e-9):
    """Boundary edges lying on segment p0 -> p1, ordered from p0."""
    t = p1 - p0
    L = float(np.hypot(*t))
    tt = t / L
    nn = np.array([-tt[1], tt[0]])
    E = mesh.boundary_edges
    a, b = mesh.nodes[E[:, 0]], mesh.nodes[E[:, 1]]
    tol = rel_tol * max(mesh.polygon.diameter, L)
    off = np.maximum(np.abs((a - p0) @ nn), np.abs((b - p0) @ nn))
    sa, sb = (a - p0) @ tt, (b - p0) @ tt
    on = (off < tol) & (np.minimum(sa, sb) > -tol) & (np.maximum(sa, sb) < L + tol)
    idx = np.flatnonzero(on)
    if idx.size == 0:
        raise FrameMismatch("segment does not lie on the mesh boundary")
    cover = float(np.sum(np.abs(sb[idx] - sa[idx])))
    if abs(cover - L) > 1e-7 * L:
        raise FrameMismatch("segment is only partially covered by boundary edges")
    order = np.argsort(np.minimum(sa[idx], sb[idx]))
    return idx[order], sa, sb


def boundary_gradient_trace(sol, frame, side, method="flux"):
    """|grad u| along ``y_+`` (``side="upper"``) or ``y_-`` of ``frame``.

    The frame must belong to the polygon of ``sol`` (its segment from the
    fixed end to the moving vertex must be a union of boundary edges).
    """
    p0, p1 = frame.segment(side)
    mesh = sol.mesh
    idx, sa, sb = _segment_edges(mesh, np.asarray(p0), np.asarray(p1))
    L = float(np.hypot(*(np.asarray(p1) - np.asarray(p0))))
    scale = frame.xi / L  # alpha = s * xi / L (frame x grows linearly along the segment)
    E = mesh.boundary_edges[idx]
    s0 = np.minimum(sa[idx], sb[idx])
    s1 = np.maximum(sa[idx], sb[idx])
    first = np.where(sa[idx] <= sb[idx], E[:, 0], E[:, 1])
    last = np.where(sa[idx] <= sb[idx], E[:, 1], E[:, 0])
    node_seq = np.concatenate([first, last[-1:]])
    s_nodes = np.concatenate([s0, s1[-1:]])
    flux = _boundary_flux(sol)
    g_nodes = np.abs(flux[node_seq])
    # element gradients
    uf = sol.u_full
    grads = _edge_gradients(mesh, uf, E)
    return BoundaryTrace(side, frame.xi, s_nodes * scale, g_nodes,
                         0.5 * (s0 + s1) * scale, grads, (s1 - s0) * scale, method)


def boundary_triangles(mesh):
    """Index of the triangle adjacent to each boundary edge (cached per topology)."""
    key = id(mesh.triangles)
    hit = _BTRI_CACHE.get(key)
    if hit is not None and hit[0] is mesh.triangles:
        return hit[1]
    t = mesh.triangles
    T = t.shape[0]
    e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    owner = np.tile(np.arange(T), 3)
    N = mesh.n_nodes
    code = np.minimum(e[:, 0], e[:, 1]) * N + np.maximum(e[:, 0], e[:, 1])
    order = np.argsort(code)
    sc = code[order]
    b = mesh.boundary_edges
    bcode = np.minimum(b[:, 0], b[:, 1]) * N + np.maximum(b[:, 0], b[:, 1])
    pos = np.searchsorted(sc, bcode)
    res = owner[order[pos]]
    if len(_BTRI_CACHE) > 64:
        _BTRI_CACHE.clear()
    _BTRI_CACHE[key] = (mesh.triangles, res)
    return res


_BTRI_CACHE = {}


def _edge_gradients(mesh, uf, E):
    """|grad u| of the triangle adjacent to each of the boundary edges ``E``."""
    allb = mesh.boundary_edges
    N = mesh.n_nodes
    codes = np.minimum(allb[:, 0], allb[:, 1]) * N + np.maximum(allb[:, 0], allb[:, 1])
    lookup = dict(zip(codes.tolist(), range(len(codes))))
    ecodes = np.minimum(E[:, 0], E[:, 1]) * N + np.maximum(E[:, 0], E[:, 1])
    k = boundary_triangles(mesh)[[lookup[c] for c in ecodes.tolist()]]
    tri = mesh.triangles[k]
    p = mesh.nodes[tri]
    v = uf[tri]
    x, y = p[..., 0], p[..., 1]
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    area2 = b[:, 0] * c[:, 1] - b[:, 1] * c[:, 0]
    gx = np.sum(b * v, axis=1) / area2
    gy = np.sum(c * v, axis=1) / area2
    return np.hypot(gx, gy)
