import math

import numpy as np
import pytest

from polyfreq.errors import Degenerate
from polyfreq.geometry import Polygon, regular_polygon
from polyfreq.stability import (EQUILATERAL_PRODUCT, deficits, equivalence_ratio_scan,
                                isoperimetric_deficit, perturbed_equilateral,
                                pi2_over_16_family, sandwich, sharpness_exponent_fit,
                                thin_isosceles)


def _random_triangles(rng, count, max_aspect=10.0):
    out = []
    while len(out) < count:
        T = Polygon(rng.normal(size=(3, 2)), simplify=False)
        if T.diameter ** 2 / T.area <= 2 * max_aspect:
            out.append(T)
    return out


def test_isoperimetric_deficit_345():
    T = Polygon([[0, 0], [4, 0], [0, 3]])
    assert isoperimetric_deficit(T) == pytest.approx(2 / math.sqrt(3) - 1, rel=1e-14)


def test_equilateral_deficits_zero():
    E = regular_polygon(3, area=1.0)
    dl, dp = deficits(E, refine=6)
    assert abs(dp) < 1e-14
    assert abs(dl) < 5e-3 * EQUILATERAL_PRODUCT
    dl_fem, _ = deficits(E, refine=4, reference="fem")
    assert abs(dl_fem) < 1e-9


def test_deficits_invariant():
    T = Polygon([[0, 0], [1, 0], [0.2, 0.7]])
    a = deficits(T, refine=4)
    b = deficits(T.rotated(1.1).translated((3, -2)).scaled(2.5), refine=4)
    np.testing.assert_allclose(a, b, rtol=1e-9)


def test_degenerate():
    with pytest.raises(Degenerate):
        deficits(Polygon([[0, 0], [1, 0], [0.5, 1e-12]], simple=False, simplify=False))


def test_equilateral_excluded():
    exp = equivalence_ratio_scan([regular_polygon(3)], refine=3)
    assert exp.excluded[0] and math.isnan(exp.ratio[0])


def test_random_triangle_ratios_finite_positive():
    rng = np.random.default_rng(7)
    exp = equivalence_ratio_scan(_random_triangles(rng, 200), refine=4)
    r = exp.ratio[~exp.excluded]
    assert r.size == 200 and np.all(np.isfinite(r)) and np.all(r > 0)


def test_two_sided_bound_consistent_across_halves():
    """theta bounds fitted on one half enclose the other half up to a factor 2."""
    rng = np.random.default_rng(11)
    tris = _random_triangles(rng, 80)
    th = []
    for T in tris:
        dl, dp = deficits(T, refine=4)
        # lambda - 4pi^2/(A sqrt3) = theta (L^2 - 12 sqrt3 A) / A^2
        th.append(dl / T.area * T.area ** 2 / (T.perimeter ** 2 - 12 * math.sqrt(3) * T.area))
    th = np.array(th)
    a, b = th[:40], th[40:]
    assert 0.5 * a.min() <= b.min() and b.max() <= 2 * a.max()
    assert 0.5 * b.min() <= a.min() and a.max() <= 2 * b.max()


def test_thin_isosceles_shape():
    T = thin_isosceles(10)
    assert T.area == pytest.approx(1.0)
    lq, lr = sandwich(10, 0.1)
    assert lq < lr


def test_pi2_over_16_at_a10():
    (row,) = pi2_over_16_family([10], epsilon=0.1, refine=7)
    q = math.pi ** 2 / 16
    assert 0.9 * q <= row["ratio"] <= 1.2 * q
    assert row["in_bracket"] and row["sandwich_ok"]


def test_perturbation_family():
    assert perturbed_equilateral(0.0).area == pytest.approx(1.0)
    assert perturbed_equilateral(0.05).area == pytest.approx(1.0)
    exp = sharpness_exponent_fit([0.0, 0.02, 0.04, 0.08], refine=5)
    assert exp.delta_lambda[0] == pytest.approx(0.0, abs=1e-10)
    assert exp.asymmetry[0] < 1e-6 and exp.delta_P[0] < 1e-14
    # asymmetry linear in t, deficit quadratic
    a = exp.asymmetry[1:]
    assert a[1] / a[0] == pytest.approx(2.0, rel=0.1) and a[2] / a[1] == pytest.approx(2.0, rel=0.1)
    d = exp.delta_lambda[1:]
    assert d[2] / d[1] == pytest.approx(4.0, rel=0.15)
    assert exp.fitted_exponent == pytest.approx(2.0, abs=0.3)
