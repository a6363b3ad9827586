import math

import numpy as np
import pytest

from polyfreq.errors import FrameMismatch, InvalidPolygon, SolverError
from polyfreq.fem import (assemble, boundary_gradient_trace, check_conformity, eigen,
                          order_estimate, solve_lambda1, triangulate, triangulate_thin_triangle)
from polyfreq.geometry import Polygon, regular_polygon
from polyfreq.spectra_formulas import disk_lambda, equilateral_triangle_lambda
from polyfreq.symmetrize import frame_at


def test_fan_square_level0(unit_square):
    assert triangulate(unit_square, 0, method="fan").n_triangles == 4


@pytest.mark.parametrize("level", [0, 1, 2, 3])
def test_refinement_count(unit_square, level):
    base = triangulate(unit_square, 0, method="fan").n_triangles
    assert triangulate(unit_square, level, method="fan").n_triangles == 4 ** level * base


@pytest.mark.parametrize("make", [
    lambda: Polygon([[0, 0], [1, 0], [0.5, math.sqrt(3) / 2]]),
    lambda: Polygon([[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]]),
    lambda: regular_polygon(9),
])
def test_conforming(make):
    mesh = triangulate(make(), 5 if make().n == 3 else 3)
    assert check_conformity(mesh) == []
    assert mesh.triangle_areas().sum() == pytest.approx(make().area, rel=1e-12)


def test_graded_and_thin_meshes_conform():
    T = Polygon([[-10, 0], [10, 0], [0, 0.1]])
    assert check_conformity(triangulate(T, 3, grade_vertices=True)) == []
    thin = triangulate_thin_triangle(T, 4)
    assert check_conformity(thin) == []
    assert thin.triangle_areas().sum() == pytest.approx(T.area, rel=1e-12)


def test_nonconvex_uses_ear_clipping():
    L = Polygon([[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]])
    mesh = triangulate(L, 2)
    assert np.all(mesh.triangle_areas() > 0)


def test_assembly_identities(unit_square):
    mesh = triangulate(unit_square, 3)
    K, M = assemble(mesh)
    one = np.ones(mesh.n_nodes)
    assert abs(K @ one).max() < 1e-12
    assert one @ (M @ one) == pytest.approx(1.0, rel=1e-12)
    x = mesh.nodes[:, 0]
    # the Dirichlet energy of u = x is the area
    assert x @ (K @ x) == pytest.approx(1.0, rel=1e-12)


def test_transport_rejects_inversion(unit_square):
    mesh = triangulate(unit_square, 2)
    with pytest.raises(InvalidPolygon):
        mesh.transported(np.array([[0, 0], [1, 0], [0.1, 0.1], [0, 1.0]]))


def test_solver_no_interior_nodes(unit_triangle):
    with pytest.raises(SolverError):
        solve_lambda1(triangulate(unit_triangle, 0, method="ear"))


def test_square_level6(unit_square):
    sol = eigen(unit_square, 6)
    assert abs(sol.lambda1 - 2 * math.pi ** 2) / (2 * math.pi ** 2) < 5e-3
    assert sol.residual < 1e-8
    assert sol.rayleigh_quotient() == pytest.approx(sol.lambda1, rel=1e-10)
    assert np.all(sol.u_full >= -1e-10)


def test_equilateral_level6(unit_triangle):
    exact = 16 * math.pi ** 2 / 3
    assert equilateral_triangle_lambda(math.sqrt(3) / 4) == pytest.approx(exact)
    assert abs(eigen(unit_triangle, 6).lambda1 - exact) / exact < 5e-3


def test_96gon_level5():
    P = regular_polygon(96, area=math.pi)
    assert disk_lambda(math.pi) == pytest.approx(2.4048 ** 2, rel=1e-4)
    assert abs(eigen(P, 5).lambda1 - 5.7831) / 5.7831 < 1e-2


def test_second_order_convergence(unit_square):
    lams = [eigen(unit_square, l).lambda1 for l in (3, 4, 5)]
    assert order_estimate(lams) == pytest.approx(2.0, abs=0.2)


def test_eigenpair_residual():
    P = Polygon([[0, 0], [3, 0], [2.2, 1.7], [0.4, 1.2]])
    sol = eigen(P, 4)
    K, M = sol.K, sol.M
    u = sol.u_full
    i = sol.interior
    r = (K @ u - sol.lambda1 * (M @ u))[i]
    assert np.linalg.norm(r) / (sol.lambda1 * np.linalg.norm((M @ u)[i])) < 1e-8
    assert u @ (M @ u) == pytest.approx(1.0, rel=1e-10)


def test_square_boundary_trace_oracle(unit_square):
    """On y = 0 the normalised eigenfunction 2 sin(pi x) sin(pi y) has |grad u| = 2 pi sin(pi x)."""
    sol = eigen(unit_square, 6)
    fr = frame_at(unit_square, 3)  # window (0,1), (0,0), (1,0)
    side = "upper" if np.allclose(fr.upper_end, [1.0, 0.0]) else "lower"
    tr = boundary_gradient_trace(sol, fr, side)
    s = tr.alpha_nodes * math.sqrt(2)  # arclength from (1, 0)
    x = 1.0 - s
    keep = (x > 0.1) & (x < 0.9)
    exact = 2 * math.pi * np.sin(math.pi * x[keep])
    np.testing.assert_allclose(tr.g_nodes[keep], exact, rtol=0.02)
    # and it decays towards the corner at the moving vertex
    assert tr.g_nodes[-1] < 0.1 * tr.g_nodes.max()


def test_trace_frame_mismatch(unit_square):
    sol = eigen(unit_square, 3)
    other = Polygon([[0, 0], [2, 0], [2, 2], [0, 2]])
    with pytest.raises(FrameMismatch):
        boundary_gradient_trace(sol, frame_at(other, 0), "upper")


def test_eigen_json(unit_square):
    d = eigen(unit_square, 2).to_json()
    assert {"lambda1", "ndof", "residual"} <= set(d)
