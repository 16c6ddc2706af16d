import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sfh import codazzi as cz
from sfh import graph_surface as gs
from sfh.errors import DomainError, NotStationaryError
from sfh.quadrature import Rect

BOX = Rect(-2.0, 2.0, -2.0, 2.0)
ab = st.floats(-3, 3).map(lambda v: round(v, 3))


def test_closed_form_examples():
    np.testing.assert_array_equal(cz.y_closed_form(0.0, 0.0, np.linspace(-5, 5, 11)), 0.0)
    assert cz.y_closed_form(1.0, 1.0, 0.5) == pytest.approx(2.0, abs=1e-15)
    assert cz.y_closed_form(0.0, -1.0, 1.0) == pytest.approx(-0.5, abs=1e-15)
    s = np.linspace(-0.9, 0.9, 19)
    np.testing.assert_allclose(cz.y_closed_form(1.0, 1.0, s), 1 / (1 - s), rtol=1e-14)
    with pytest.raises(DomainError):
        cz.y_closed_form(1.0, 1.0, 1.0)


@settings(max_examples=100, deadline=None)
@given(a=ab, b=ab)
def test_initial_values(a, b):
    y, dy = cz.y_closed_form(a, b, 0.0, derivative=True)
    assert y == pytest.approx(a, abs=1e-15)
    assert dy == pytest.approx(b, abs=1e-13 * (1 + a * a + abs(b)))


def test_first_integral_examples():
    assert cz.first_integral_residual(0.0, 0.0, 0.7) == 0.0
    assert cz.first_integral_residual(1.0, 1.0, 0.25) <= 1e-12
    s = np.random.default_rng(1).uniform(-3, 3, 50)
    assert np.max(cz.first_integral_residual(2.0, -1.0, s)) <= 1e-10


def test_classification_examples():
    assert cz.classify_global(0, 0).entire
    assert cz.classify_global(0, -1).entire
    c = cz.classify_global(1, 1)
    assert not c.entire and c.pole == pytest.approx(1.0)
    c = cz.classify_global(0.5, 1.0)
    assert not c.entire and all(abs(cz._denominator(0.5, 1.0, p)) < 1e-12 for p in c.poles)
    assert cz.classify_global(0.0, 1e-3).pole is not None


@settings(max_examples=100, deadline=None)
@given(a=ab, b=ab)
def test_classification_matches_denominator(a, b):
    c = cz.classify_global(a, b)
    s = np.linspace(-60, 60, 240001)
    den = cz._denominator(a, b, s)
    if c.entire and not (a == 0 and b == 0):
        assert a * a > b
        assert np.all(den > 0)
    if not c.entire:
        assert a * a <= b
        assert abs(cz._denominator(a, b, c.pole)) <= 1e-9 * (1 + abs(c.pole)) ** 2


def test_entire_solutions_stay_bounded_far_out():
    rng = np.random.default_rng(7)
    count = 0
    while count < 10:
        a, b = rng.uniform(-2, 2, 2)
        if not cz.classify_global(a, b).entire:
            continue
        count += 1
        sol = cz.integrate_codazzi(a, b, (-50, 50), step=2e-3)
        assert not sol.truncated
        np.testing.assert_allclose(sol.y, cz.y_closed_form(a, b, sol.s), atol=1e-7)


def test_rk4_example_and_truncation():
    sol = cz.integrate_codazzi(1.0, 1.0, (0.0, 0.5), step=1e-4)
    assert np.max(np.abs(sol.y - cz.y_closed_form(1, 1, sol.s))) <= 1e-8
    sol = cz.integrate_codazzi(1.0, 1.0, (-1.0, 2.0), step=1e-3)
    assert sol.truncated and "pole" in sol.reason
    assert sol.s.max() < 1.0
    with pytest.raises(ValueError):
        cz.integrate_codazzi(0, 0, (1, 0))


def test_rk4_order():
    def err(step):
        sol = cz.integrate_codazzi(0.7, -0.4, (-1, 1), step)
        return np.max(np.abs(sol.y - cz.y_closed_form(0.7, -0.4, sol.s)))

    assert err(0.02) / err(0.01) >= 12


def test_dilation():
    gap, res = cz.dilation_residual(0.8, -0.5, 1.7, (-1, 1), step=1e-4)
    assert gap <= 1e-8 and res <= 1e-6


def test_ode_residual_detects_wrong_function():
    s = np.linspace(-1, 1, 2001)
    assert cz.ode_residual(s, cz.y_closed_form(0.5, -1, s)) <= 1e-5
    assert cz.ode_residual(s, np.sin(s)) > 0.1


def _stationary():
    return [gs.zero_graph(BOX), gs.xt_graph(BOX), gs.rational_ruled_graph(BOX, 0.5, 0.2),
            gs.affine_graph(BOX, 0.4, 0.7)]


@pytest.mark.parametrize("idx", range(4))
def test_on_surface(idx):
    g = _stationary()[idx]
    for eps in (-0.5, 0.0, 0.7):
        r = cz.codazzi_residual_on_surface(g, eps, step=1e-3)
        assert r.residual <= 1e-5 and r.residual_arc <= 1e-5
        assert r.gap_y0 <= 1e-7 and r.gap_dy0 <= 1e-5
        assert r.gap_y0_arc <= 1e-7 and r.gap_dy0_arc <= 1e-5
        assert r.closed_form_gap <= 1e-6


def test_on_surface_zero_graph():
    r = cz.codazzi_residual_on_surface(gs.zero_graph(BOX), 0.0)
    assert r.residual == 0.0 and np.all(r.y == 0.0)


def test_on_surface_requires_stationary():
    with pytest.raises(NotStationaryError):
        cz.codazzi_residual_on_surface(gs.poly_graph(BOX, [[0.0, 1.0]]), 0.3)
