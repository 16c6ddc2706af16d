import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sfh import convex_body as cb
from sfh import graph_surface as gs
from sfh import stability as sb
from sfh.bumps import Bump2D
from sfh.errors import DomainError, NotStationaryError
from sfh.quadrature import QuadratureSpec, Rect
from sfh.variation import second_variation_formula

from suites import BUMP, QUAD, SQUARE, bodies, stationary_graphs

BIG = Rect(-5.0, 5.0, -5.0, 5.0)


def test_form_matches_second_variation():
    for g in stationary_graphs().values():
        for body in bodies().values():
            q = sb.stability_form(g, body, BUMP, QUAD)
            assert q == pytest.approx(second_variation_formula(g, BUMP, body, QUAD), abs=1e-10)


@settings(max_examples=20, deadline=None)
@given(lam=st.floats(-5, 5))
def test_form_is_quadratic(lam):
    g = gs.xt_graph(SQUARE)
    body = cb.ellipse(2, 1)
    q1 = sb.stability_form(g, body, BUMP, QUAD)
    assert sb.stability_form(g, body, BUMP.scaled(lam), QUAD) == pytest.approx(lam**2 * q1, rel=1e-10, abs=1e-14)


def test_form_rejects_non_stationary():
    with pytest.raises(NotStationaryError):
        sb.stability_form(gs.poly_graph(SQUARE, [[0.0, 1.0]]), cb.disk(), BUMP, QUAD)


def test_plane_form_examples():
    g = gs.zero_graph(Rect(-40, 40, -2, 2))
    vals = []
    for L in (2.0, 8.0, 32.0):
        f = Bump2D(Rect(-L, L, -1, 1), power=3)
        x, t, w = QuadratureSpec(16, (8, 2)).nodes(f.support)
        fx, _ = f.grad(x, t)
        q = sb.stability_form(g, cb.disk(), f, QuadratureSpec(16, (8, 2)))
        assert q == pytest.approx(float(np.dot(fx**2, w)), rel=1e-8)
        vals.append(q)
    assert vals[0] > vals[1] > vals[2] > 0
    # energy decays like 1/L
    assert vals[2] == pytest.approx(vals[0] / 16, rel=1e-6)


def _midpoint(lo, hi, n=400000):
    s = lo + (hi - lo) * (np.arange(n) + 0.5) / n
    return s, (hi - lo) / n


def test_hardy_examples():
    rng = np.random.default_rng(0)
    psi = sb.random_bump_sum(rng, (-2, 3))
    s, w = _midpoint(-2, 3)
    assert sb.hardy_gap(0, 0, psi) == pytest.approx(float(np.sum(psi.deriv(s) ** 2) * w), rel=1e-6)
    psi = sb.random_bump_sum(rng, (-0.5, 3))
    s, w = _midpoint(-0.5, 3)
    h = 1 + 2 * s + s * s
    assert sb.hardy_gap(2, 2, psi) == pytest.approx(float(np.sum(psi.deriv(s) ** 2 * h) * w), rel=1e-6)
    with pytest.raises(DomainError):
        sb.hardy_gap(0, -2, sb.cutoff_rational(3.0))


def test_hardy_failure_for_zero_two():
    gaps = [sb.hardy_gap(0.0, 2.0, sb.cutoff_rational(L), cells=256) for L in (10, 60, 200)]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[1] < 0
    assert gaps[2] == pytest.approx(-np.pi, abs=0.05)


def test_hardy_holds_on_parabola():
    rng = np.random.default_rng(42)
    for _ in range(30):
        A = rng.uniform(-3, 3)
        B = A * A / 2
        psi = sb.random_bump_sum(rng, sb.support_avoiding_roots(A, B, rng))
        assert sb.hardy_gap(A, B, psi) >= 0


def test_cutoff_derivative():
    psi = sb.cutoff_rational(5.0, center=1.0)
    s = np.linspace(-3.9, 5.9, 41)
    d = 1e-6
    np.testing.assert_allclose(psi.deriv(s), (psi.value(s + d) - psi.value(s - d)) / (2 * d), atol=1e-8)
    assert psi.value(6.5) == 0.0


def test_basis_partition_of_unity():
    b = sb.CosSquaredBasis1D(-1, 2, 10)
    x = np.linspace(b.knots[1], b.knots[-2], 200)
    v, dv = b.evaluate(np.ones(10), x)
    np.testing.assert_allclose(v, 1.0, atol=1e-14)
    np.testing.assert_allclose(dv, 0.0, atol=1e-12)
    v, _ = b.evaluate(np.ones(10), np.array([-1.0, 2.0]))
    np.testing.assert_allclose(v, 0.0, atol=1e-15)
    with pytest.raises(ValueError):
        sb.CosSquaredBasis1D(0, 1, 0)


def test_tensor_function_gradient():
    rng = np.random.default_rng(3)
    f = sb.TensorFunction(SQUARE, (4, 5), rng.normal(size=20))
    x, t = rng.uniform(-0.95, 0.95, (2, 30))
    d = 1e-6
    fx, ft = f.grad(x, t)
    np.testing.assert_allclose(fx, (f(x + d, t) - f(x - d, t)) / (2 * d), atol=1e-6)
    np.testing.assert_allclose(ft, (f(x, t + d) - f(x, t - d)) / (2 * d), atol=1e-6)
    assert f(1.5, 0.0) == 0.0


@pytest.mark.parametrize("make", [lambda: gs.zero_graph(SQUARE), lambda: gs.affine_graph(SQUARE, 0.4, 0.7)])
def test_planes_have_no_negative_direction(make):
    for body in bodies().values():
        res = sb.find_destabilizing(make(), body, shape=(8, 8), refinements=1)
        assert res.min_eigenvalue >= -sb.NEG_TOL
        assert res.kappa_oscillation <= 1e-12


def test_xt_graph_has_negative_direction():
    g = gs.xt_graph(Rect(-4.0, 4.0, -4.0, 4.0))
    lam, vec = sb.min_eigenpair(g, cb.disk(), Rect(-3.8, 3.8, -3.8, 3.8), (24, 24))
    assert lam < 0
    f = sb.TensorFunction(Rect(-3.8, 3.8, -3.8, 3.8), (24, 24), vec)
    q = sb.stability_form(g, cb.disk(), f, sb.witness_quadrature(f.rect, f.shape))
    assert q / sb.witness_mass(g, cb.disk(), f) == pytest.approx(lam, rel=1e-2)


def test_dense_and_sparse_solvers_agree(monkeypatch):
    g = gs.xt_graph(SQUARE)
    body = cb.ellipse(2, 1)
    rect = Rect(-0.9, 0.9, -0.9, 0.9)
    lam_dense, _ = sb.min_eigenpair(g, body, rect, (10, 10))
    monkeypatch.setattr(sb, "DENSE_LIMIT", 10)
    lam_sparse, _ = sb.min_eigenpair(g, body, rect, (10, 10))
    assert lam_sparse == pytest.approx(lam_dense, rel=1e-9)


def test_vertical_plane_residual():
    assert sb.vertical_plane_residual(gs.affine_graph(SQUARE, 0.4, 0.7)) <= 1e-12
    assert sb.vertical_plane_residual(gs.xt_graph(SQUARE)) > 1e-2


def test_report_verdicts():
    r = sb.bernstein_report(gs.zero_graph(SQUARE), cb.disk(), basis=(8, 8), refinements=1)
    assert r.verdict == "stable-planar" and r.planar and r.min_eigenvalue >= -sb.NEG_TOL
    r = sb.bernstein_report(gs.affine_graph(SQUARE, 6.0, 2.0), cb.ellipse(2, 1), basis=(8, 8), refinements=1)
    assert r.verdict == "stable-planar"
    r = sb.bernstein_report(gs.poly_graph(SQUARE, [[0.0, 1.0]]), cb.disk())
    assert r.verdict == "inconclusive" and not r.stationary and r.notes
    r = sb.bernstein_report(gs.xt_graph(Rect(-0.5, 0.5, -0.5, 0.5)), cb.disk(), basis=(6, 6), refinements=1)
    assert r.verdict == "inconclusive" and not r.planar
    for row in r.A_B_per_eps:
        assert row["A"] == pytest.approx(0.0, abs=1e-8)
        assert row["two_B_minus_A_sq"] == pytest.approx(4.0, abs=1e-6)


def test_report_unstable():
    r = sb.bernstein_report(gs.xt_graph(BIG), cb.disk())
    assert r.verdict == "unstable" and r.converged
    assert r.min_eigenvalue < 0
    assert r.witness["Q_direct"] < 0 and r.witness["rel_gap"] <= 0.01
    d = r.to_dict()
    assert d["verdict"] == "unstable" and len(d["eigen_history"]) >= 2
