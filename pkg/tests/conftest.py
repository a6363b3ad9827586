"""Shared fixtures and hypothesis strategies."""

import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from polyfreq.geometry import Polygon

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def convex_polygon_from(n, gaps, ax, ay, rot, cx=0.0, cy=0.0):
    """Vertices on an ellipse at angles set by positive ``gaps``; always strictly convex."""
    g = np.asarray(gaps, dtype=float)
    theta = np.cumsum(g / g.sum() * 2 * math.pi)
    pts = np.column_stack((ax * np.cos(theta), ay * np.sin(theta)))
    c, s = math.cos(rot), math.sin(rot)
    pts = pts @ np.array([[c, s], [-s, c]]) + np.array([cx, cy])
    return Polygon(pts, simplify=False)


@st.composite
def convex_polygons(draw, min_n=3, max_n=9):
    n = draw(st.integers(min_n, max_n))
    gaps = draw(st.lists(st.floats(0.35, 1.0), min_size=n, max_size=n))
    ax = draw(st.floats(0.5, 2.0))
    ay = draw(st.floats(0.5, 2.0))
    rot = draw(st.floats(0.0, 2 * math.pi))
    cx = draw(st.floats(-3.0, 3.0))
    cy = draw(st.floats(-3.0, 3.0))
    return convex_polygon_from(n, gaps, ax, ay, rot, cx, cy)


def random_convex(rng, n, spread=0.7):
    gaps = rng.uniform(1 - spread, 1.0, size=n)
    return convex_polygon_from(n, gaps, rng.uniform(0.6, 1.6), rng.uniform(0.6, 1.6),
                               rng.uniform(0, 2 * math.pi))


@pytest.fixture
def unit_square():
    return Polygon([[0, 0], [1, 0], [1, 1], [0, 1]])


@pytest.fixture
def unit_triangle():
    return Polygon([[0, 0], [1, 0], [0.5, math.sqrt(3) / 2]])


# ---------------------------------------------------------------------------
# acceptance summary: one line per criterion at the end of the run

ACCEPTANCE_RESULTS = {}


def record_acceptance(number, passed, detail):
    """Store and print the verdict line for one acceptance criterion."""
    line = f"ACCEPTANCE {number:2d}: {'PASS' if passed else 'FAIL'} - {detail}"
    ACCEPTANCE_RESULTS[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_RESULTS):
            terminalreporter.write_line(ACCEPTANCE_RESULTS[k])
