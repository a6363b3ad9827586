import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polyfreq.errors import DegenerateTriangle, DomainError, StepRejected
from polyfreq.geometry import Polygon, regular_polygon
from polyfreq.symmetrize import (frame_at, perimeter_change, perimeter_change_estimate,
                                 rate_membership, run_flow, symmetrize_step,
                                 triangle_fixed_point, triangle_side_map,
                                 triangle_side_map_derivative)

from conftest import convex_polygons, random_convex


# --------------------------------------------------------------- one step


def test_isosceles_window_is_fixed():
    P = Polygon([[0, 0], [2, 0], [1, 3]])
    Q, fr = symmetrize_step(P, 1)  # window (v1, v2, v0): v2 = (1, 3) is on the axis
    assert fr.t_star == pytest.approx(0.0, abs=1e-15)
    np.testing.assert_allclose(Q.vertices, P.vertices, atol=1e-15)


@pytest.mark.parametrize("h,t", [(1.0, 0.3), (0.5, -0.2), (2.0, 0.0)])
def test_axis_aligned_frame(h, t):
    V = np.array([[0.0, 1.0], [h, t], [0.0, -1.0]])
    fr = frame_at(V, 0)
    np.testing.assert_allclose(fr.v2_star, [h, 0.0], atol=1e-15)
    assert fr.t_star == pytest.approx(abs(t))
    assert fr.xi == pytest.approx(h)
    assert fr.b == pytest.approx(2.0)


def test_right_triangle_oracle():
    P = Polygon([[0, 3], [0, 0], [4, 0]], simplify=False)
    # hypotenuse 3x + 4y = 12: distance of the origin is 12/5 along the normal (3, 4)/5
    mid = np.array([2.0, 1.5])
    v2_star = mid - 12 / 5 * np.array([3, 4]) / 5
    t_star = abs(np.dot(np.array([0.0, 0.0]) - mid, np.array([-4, 3]) / 5))
    i = [k for k in range(3) if np.allclose(P.vertices[k], [0, 3])][0]
    Q, fr = symmetrize_step(P, i)
    np.testing.assert_allclose(fr.v2_star, v2_star, atol=1e-14)
    assert fr.t_star == pytest.approx(t_star) and t_star == pytest.approx(0.7)
    assert Q.area == pytest.approx(6.0, rel=1e-15)


def test_collinear_window():
    V = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [1.0, 1.0]])
    with pytest.raises(DegenerateTriangle):
        frame_at(V, 0)


def test_non_simple_result_rejected():
    # a reflex vertex whose symmetrized position crosses the opposite edge
    P = Polygon([[0, 0], [4, 0], [4, 0.2], [0.5, 0.2], [0.2, 3.0]])
    with pytest.raises(StepRejected):
        symmetrize_step(P, 2)


@given(convex_polygons(), st.integers(0, 8))
@settings(max_examples=300)
def test_step_area_and_perimeter(P, i):
    i = i % P.n
    Q, fr = symmetrize_step(P, i)
    assert Q.area == pytest.approx(P.area, rel=1e-12)
    assert P.perimeter - Q.perimeter == pytest.approx(fr.phi(fr.t_star), abs=1e-12 * P.perimeter)
    assert fr.phi(fr.t_star) >= -1e-15 * P.perimeter


def test_perimeter_change_formula():
    b, xi, t = 2.0, 1.0, 0.3
    expected = math.hypot(1 - t, 1) + math.hypot(1 + t, 1) - 2 * math.sqrt(2)
    assert perimeter_change(t, b, xi) == pytest.approx(expected)
    assert perimeter_change(0.0, b, xi) == 0.0


def _small_step_ratios(count=50, seed=0):
    rng = np.random.default_rng(seed)
    ratios = []
    for _ in range(count):
        P = random_convex(rng, int(rng.integers(3, 10)))
        tr = run_flow(P)
        for k in np.flatnonzero((tr.offsets > 0) & (tr.offsets < 0.01 * P.diameter)):
            fr = frame_at(tr.history[k], int(tr.leads[k]))
            drop = tr.perimeters[k] - tr.perimeters[k + 1]
            if drop > 1e-13:
                ratios.append(drop / perimeter_change_estimate(fr.t_star, fr.xi))
    return np.array(ratios)


@pytest.mark.xfail(strict=True, reason="the estimate (1/(2 sqrt 2)) xi^(1/2) t^2 is not "
                   "homogeneous in length; observed ratios spread over two decades")
def test_perimeter_drop_estimate_band():
    r = _small_step_ratios()
    assert r.size > 100
    assert np.all((r >= 0.2) & (r <= 0.6))


def test_perimeter_drop_second_order():
    """The exact drop behaves like xi^2 t^2 / l^3 with l = sqrt((b/2)^2 + xi^2)."""
    for b, xi in [(2.0, 1.0), (1.0, 0.1), (3.0, 2.5)]:
        l = math.hypot(0.5 * b, xi)
        t = 1e-4 * b
        assert perimeter_change(t, b, xi) == pytest.approx(xi ** 2 * t ** 2 / l ** 3, rel=1e-6)


# ------------------------------------------------------------------ flows


@pytest.mark.parametrize("n", [3, 5, 8])
def test_regular_converged_immediately(n):
    tr = run_flow(regular_polygon(n))
    assert tr.converged and tr.iterations_to_converge == 0
    assert tr.steps == 0 and tr.offsets.size == 0


@given(st.floats(0.2, 3.0), st.floats(-2.0, 2.0), st.floats(0.3, 3.0))
@settings(max_examples=100)
def test_triangles_become_equilateral(base, apex_x, height):
    T = Polygon([[0, 0], [base, 0], [apex_x, height]], simplify=False)
    tr = run_flow(T, max_iter=2000, tol=1e-10)
    assert tr.converged
    s = tr.side_lengths()[-1]
    side = math.sqrt(4 * T.area / math.sqrt(3))
    np.testing.assert_allclose(s, side, rtol=1e-9)


def test_heptagon_converges():
    from polyfreq.manifold import sample_near_regular
    for P in sample_near_regular(7, 0.05, seed=42, count=10):
        tr = run_flow(P, max_iter=500)
        assert tr.converged and tr.iterations_to_converge < 500


@given(convex_polygons())
@settings(max_examples=200)
def test_trace_invariants(P):
    tr = run_flow(P, max_iter=400)
    assert tr.area_drift() <= 1e-10
    dp = np.diff(tr.perimeters)
    assert np.all(dp <= 1e-12 * tr.perimeters[0])
    # strict decrease wherever the exact drop phi(t) is resolvable in floating point
    drops = np.array([frame_at(tr.history[k], int(tr.leads[k])).phi(tr.offsets[k])
                      for k in range(tr.steps)])
    visible = drops > 1e-12 * tr.perimeters[0]
    assert np.all(dp[visible] < 0)


def test_largest_schedule():
    rng = np.random.default_rng(4)
    P = random_convex(rng, 6)
    tr = run_flow(P, schedule="largest", max_iter=3000)
    assert tr.converged and tr.area_drift() <= 1e-10


def test_unknown_schedule(unit_triangle):
    with pytest.raises(ValueError):
        run_flow(unit_triangle.scaled(1.0).with_vertex(0, (0.1, 0.0)), schedule="random")


def test_trace_rows_and_json(unit_square):
    T = Polygon([[0, 0], [3, 0], [0.5, 1]])
    tr = run_flow(T)
    rows = tr.rows()
    assert len(rows) == tr.steps + 1
    assert all(len(r) >= 3 for r in rows)


# ------------------------------------------------------------ rate sets


def test_rate_one_step():
    T = Polygon([[0, 0], [2, 0], [1, 3]])
    tr = run_flow(regular_polygon(4))
    rep = rate_membership(tr, 1.0)
    assert rep.all_members and rep.k.size == 0


def test_rate_triangles_universal_after_first_step():
    """Once the first step has made the triangle isosceles the rate is universal."""
    rng = np.random.default_rng(0)
    for _ in range(500):
        T = random_convex(rng, 3)
        rep = rate_membership(run_flow(T, tol=1e-10), 2.0)
        assert np.all(rep.members[rep.k >= 2])


def test_rate_first_step_not_uniform():
    """A nearly isosceles first window gives a tiny t_0 followed by a large t_1."""
    T = Polygon([[-1.0, 0.0], [1.0, 0.0], [1e-4, 0.4]])
    i = [k for k in range(3) if T.vertices[(k + 1) % 3][1] > 0.1][0]
    rep = rate_membership(run_flow(T, start=i, tol=1e-10), 2.0)
    assert rep.k[0] == 1 and rep.ratios[0] > 1e4


def test_rate_adversarial_quadrilateral_reports():
    P = Polygon([[0, 0], [10, 0], [10, 0.05], [0, 0.1]])
    rep = rate_membership(run_flow(P, max_iter=500), 1.0)
    assert rep.ratios.shape == rep.members.shape


# --------------------------------------------------------- triangle map


def test_side_map_fixed_point():
    s = 4 / math.sqrt(3)
    assert triangle_fixed_point(1.0) == pytest.approx(s)
    assert triangle_side_map(s, 1.0) == pytest.approx(s, rel=1e-15)
    assert math.sqrt(s) == pytest.approx(2 / 3 ** 0.25)
    assert triangle_side_map_derivative(s, 1.0) == pytest.approx(-0.5, rel=1e-15)


def test_side_map_iteration_ratio():
    s, fp, errs = 3.0, 4 / math.sqrt(3), []
    for _ in range(30):
        s = triangle_side_map(s, 1.0)
        errs.append(abs(s - fp))
    ratio = errs[-1] / errs[-2]
    assert ratio == pytest.approx(0.5, abs=0.01)


@pytest.mark.parametrize("s,A", [(0.0, 1.0), (-1.0, 1.0), (1.0, 0.0)])
def test_side_map_domain(s, A):
    with pytest.raises(DomainError):
        triangle_side_map(s, A)
