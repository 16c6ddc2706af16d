import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sfh import heisenberg as hb

coord = st.floats(-5, 5)
point = st.tuples(coord, coord, coord)


def test_group_law_examples():
    assert hb.group_mul((1, 0, 0), (0, 1, 0)) == pytest.approx((1, 1, -1))
    assert hb.group_mul((0, 1, 0), (1, 0, 0)) == pytest.approx((1, 1, 1))
    p = (0.3, -1.2, 2.0)
    assert hb.group_mul(p, hb.group_inv(p)) == pytest.approx((0, 0, 0))


@settings(max_examples=100, deadline=None)
@given(p=point, q=point, r=point)
def test_associativity(p, q, r):
    lhs = hb.group_mul(hb.group_mul(p, q), r)
    rhs = hb.group_mul(p, hb.group_mul(q, r))
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


@settings(max_examples=100, deadline=None)
@given(c=st.tuples(coord, coord, coord))
def test_J_squared(c):
    v = hb.FrameVector(*c)
    jj = hb.J_op(hb.J_op(v))
    np.testing.assert_allclose([jj.f, jj.g, jj.h], [-c[0], -c[1], 0.0], atol=1e-15)
    np.testing.assert_allclose(hb.J_array(hb.J_array(c)), [-c[0], -c[1], 0.0], atol=1e-15)


@settings(max_examples=100, deadline=None)
@given(p=point, f=coord, g=coord)
def test_horizontal_frame_in_contact_kernel(p, f, g):
    v = hb.from_frame(p, [f, g, 0.0])
    assert abs(hb.contact_form(p, v)) <= 1e-12 * (1 + abs(v).max() * (1 + np.abs(p).max()))
    np.testing.assert_allclose(hb.to_frame(p, v), [f, g, 0.0], atol=1e-12)


def _left_translation_differential(q):
    """Jacobian of p -> q * p, computed by central differences."""
    jac = np.zeros((3, 3))
    d = 1e-6
    for k in range(3):
        e = np.zeros(3)
        e[k] = d
        jac[:, k] = (np.array(hb.group_mul(q, e)) - np.array(hb.group_mul(q, -e))) / (2 * d)
    return jac


@settings(max_examples=50, deadline=None)
@given(q=point)
def test_frame_left_invariant(q):
    X0, Y0, T0 = hb.frame_at((0.0, 0.0, 0.0))
    X1, Y1, T1 = hb.frame_at(q)
    jac = _left_translation_differential(q)
    for a, b in ((X0, X1), (Y0, Y1), (T0, T1)):
        np.testing.assert_allclose(jac @ a, b, atol=1e-8)


def _bracket(i, j, p, d=1e-6):
    """Lie bracket of frame fields i, j at p via coordinate derivatives."""
    def field(k, q):
        return hb.frame_at(q)[k]

    def dir_deriv(k, vec, q):
        q = np.asarray(q, float)
        return (field(k, q + d * vec) - field(k, q - d * vec)) / (2 * d)

    A, B = field(i, p), field(j, p)
    return dir_deriv(j, A, p) - dir_deriv(i, B, p)


def test_levi_civita_table_from_koszul():
    p = np.array([0.7, -0.4, 1.3])
    br = {(i, j): hb.to_frame(p, _bracket(i, j, p)) for i in range(3) for j in range(3)}
    np.testing.assert_allclose(br[(0, 1)], [0, 0, -2], atol=1e-8)
    for i in range(3):
        for j in range(3):
            for k in range(3):
                # Koszul formula for an orthonormal frame
                val = 0.5 * (br[(i, j)][k] - br[(j, k)][i] + br[(k, i)][j])
                assert hb.LEVI_CIVITA_TABLE[i, j, k] == pytest.approx(val, abs=1e-7)


def test_connection_examples():
    s0 = 0.0
    vel = lambda s: np.array([1.0, 0.0, 0.0])
    Yf = lambda s: np.array([0.0, 1.0, 0.0])
    np.testing.assert_allclose(hb.levi_civita_derivative(vel, Yf, s0), [0, 0, -1], atol=1e-12)
    np.testing.assert_allclose(hb.pseudo_hermitian_derivative(Yf, s0), [0, 0, 0], atol=1e-12)
    Vf = lambda s: np.array([np.cos(s), np.sin(s), s])
    np.testing.assert_allclose(hb.pseudo_hermitian_derivative(Vf, 0.4), [-np.sin(0.4), np.cos(0.4), 1.0], atol=1e-9)


@settings(max_examples=50, deadline=None)
@given(w=st.floats(-3, 3), s=st.floats(-2, 2))
def test_J_parallel(w, s):
    """D(J V) = J(D V) for the pseudo-hermitian connection."""
    V = lambda r: np.array([np.cos(w * r), r**2, np.sin(r)])
    JV = lambda r: hb.J_array(V(r))
    lhs = hb.pseudo_hermitian_derivative(JV, s)
    rhs = hb.J_array(hb.pseudo_hermitian_derivative(V, s))
    np.testing.assert_allclose(lhs, rhs, atol=1e-8)


def test_levi_civita_metric_compatible():
    vel = lambda s: np.array([np.cos(s), np.sin(s), 0.3])
    V = lambda s: np.array([s, 1.0, s**2])
    W = lambda s: np.array([np.sin(s), -s, 2.0])
    s, d = 0.35, 1e-5
    dot = lambda r: float(V(r) @ W(r))
    lhs = (dot(s + d) - dot(s - d)) / (2 * d)
    rhs = hb.levi_civita_derivative(vel, V, s) @ W(s) + V(s) @ hb.levi_civita_derivative(vel, W, s)
    assert lhs == pytest.approx(rhs, abs=1e-8)


def test_cross_orientation():
    np.testing.assert_allclose(hb.cross([1, 0, 0], [0, 1, 0]), [0, 0, 1])


def test_frame_and_contact_examples():
    X, Y, T = hb.frame_at((0.0, 0.0, 0.0))
    np.testing.assert_array_equal(np.stack([X, Y, T]), np.eye(3))
    np.testing.assert_array_equal(hb.frame_at((1.0, 2.0, 5.0))[0], [1, 0, 2])
    assert hb.group_mul((0, 0, 0), (1.5, -2, 3)) == (1.5, -2, 3)
    j = hb.J_op(hb.FrameVector(1.0, 0.0, 0.0))
    assert (j.f, j.g, j.h) == (0.0, 1.0, 0.0)
    j = hb.J_op(hb.FrameVector(0.0, 1.0, 0.0))
    assert (j.f, j.g, j.h) == (-1.0, 0.0, 0.0)
    j = hb.J_op(hb.FrameVector(0.0, 0.0, 1.0))
    assert (j.f, j.g, j.h) == (0.0, 0.0, 0.0)
    p = (0.4, -1.0, 2.0)
    assert hb.contact_form(p, hb.frame_at(p)[0]) == 0.0
    assert hb.contact_form(p, hb.frame_at(p)[2]) == 1.0
    assert hb.contact_form((1.0, 0.0, 0.0), [0.0, 1.0, 0.0]) == 1.0


def test_levi_civita_examples():
    X = lambda s: np.array([1.0, 0.0, 0.0])
    T = lambda s: np.array([0.0, 0.0, 1.0])
    np.testing.assert_allclose(hb.levi_civita_derivative(X, T, 0.0), [0, 1, 0], atol=1e-12)
    np.testing.assert_allclose(hb.levi_civita_derivative(X, X, 0.0), [0, 0, 0], atol=1e-12)
    a, b = 0.7, -1.3
    V = lambda s: np.array([a, b, 0.0])
    np.testing.assert_allclose(hb.levi_civita_derivative(X, V, 0.0), [0, 0, -b], atol=1e-12)
    np.testing.assert_allclose(hb.pseudo_hermitian_derivative(V, 0.2), [0, 0, 0], atol=1e-12)
    np.testing.assert_allclose(hb.pseudo_hermitian_derivative(lambda s: np.array([s, 0.0, 0.0]), 3.0),
                               [1, 0, 0], atol=1e-9)
