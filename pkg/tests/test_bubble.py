import math

import pytest
from hypothesis import given, settings, strategies as st

from polyfreq.bubble import (BubbleParams, closed_form_zero_pressure, energy, energy_derivative,
                             equilibrium_bisection, equilibrium_scale, quartic)
from polyfreq.errors import DomainError, NoEquilibrium
from polyfreq.geometry import regular_polygon


def _params(psi=2.0, sigma=3.0, pressure=0.5, n=64, lam=5.8, **kw):
    return BubbleParams(psi, sigma, pressure, n, lam, regular_polygon(n, area=math.pi).perimeter,
                        **kw)


def test_energy_limits():
    p = _params()
    assert energy(p, 1e-6) > 1e10
    assert energy(p, 1e6) > 1e10
    with pytest.raises(DomainError):
        energy(p, 0.0)


def test_invalid_params():
    with pytest.raises(DomainError):
        _params(psi=-1)
    with pytest.raises(DomainError):
        _params(pressure=-0.1)


def test_zero_pressure_closed_form():
    p = _params(pressure=0.0)
    assert equilibrium_scale(p) == pytest.approx(closed_form_zero_pressure(p), rel=1e-12)


def test_constructed_root_one():
    n, lam = 12, 6.1
    perim = regular_polygon(n, area=math.pi).perimeter
    sigma, pressure = 1.3, 0.7
    sh = sigma * perim
    psi = (1 + 2 * pressure * math.pi / sh) * sh / (2 * lam)
    p = BubbleParams(psi, sigma, pressure, n, lam, perim)
    assert equilibrium_scale(p) == pytest.approx(1.0, abs=1e-12)


def test_generic_newton_vs_bisection():
    p = BubbleParams.for_polygon(2.0, 3.0, 0.5, 64, refine=5)
    a = equilibrium_scale(p)
    assert abs(a - equilibrium_bisection(p)) < 1e-10
    assert abs(energy_derivative(p, a)) < 1e-10


@given(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.0, 10), st.integers(3, 40),
       st.floats(1.0, 50.0))
@settings(max_examples=200)
def test_newton_matches_bisection(psi, sigma, pressure, n, lam):
    p = _params(psi, sigma, pressure, n, lam)
    a = equilibrium_scale(p)
    assert abs(a - equilibrium_bisection(p)) <= 1e-10 * max(1.0, a)
    assert abs(quartic(p, a)) < 1e-9


def test_negative_pressure_no_root():
    p = _params(pressure=-1e3, allow_negative_pressure=True)
    with pytest.raises(NoEquilibrium):
        equilibrium_scale(p)


def test_unit_coefficients_zero_pressure():
    p = BubbleParams(1.0, 1.0, 0.0, 96, 5.7832, 6.2832)
    a = equilibrium_scale(p)
    assert a == pytest.approx((2 * 5.7832 / 6.2832) ** (1 / 3), rel=1e-12)
    assert a == pytest.approx(1.225573, abs=1e-6)
