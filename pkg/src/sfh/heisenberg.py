"""The first Heisenberg group H^1 in exponential coordinates (x, y, t).

Vectors are handled through their coefficients in the left-invariant frame

    X = d/dx + y d/dt,   Y = d/dy - x d/dt,   T = d/dt,

which is orthonormal for the auxiliary metric.  Both connections used in
the variational formulas are applied as rules on frame coefficients.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

DEFAULT_FD_STEP = 1e-5


class HPoint(NamedTuple):
    x: float
    y: float
    t: float


class FrameVector(NamedTuple):
    """f X + g Y + h T (fields may be numpy arrays)."""

    f: float
    g: float
    h: float

    def as_array(self):
        return np.stack(np.broadcast_arrays(*map(np.asarray, self)), axis=-1).astype(float)

    @property
    def is_horizontal(self):
        return np.all(np.asarray(self.h) == 0)


def group_mul(p, q) -> HPoint:
    x, y, t = p
    xb, yb, tb = q
    return HPoint(x + xb, y + yb, t + tb + xb * y - x * yb)


def group_inv(p) -> HPoint:
    x, y, t = p
    return HPoint(-x, -y, -t)


def frame_at(p):
    """Euclidean components of X, Y, T at p, as three arrays of shape (..., 3)."""
    x, y, _ = (np.asarray(c, dtype=float) for c in p)
    one, zero = np.ones_like(x), np.zeros_like(x)
    X = np.stack([one, zero, y], axis=-1)
    Y = np.stack([zero, one, -x], axis=-1)
    T = np.stack([zero, zero, one], axis=-1)
    return X, Y, T


def to_frame(p, v):
    """Coordinate vector v at p -> frame coefficients (f, g, h)."""
    x, y, _ = (np.asarray(c, dtype=float) for c in p)
    v = np.asarray(v, dtype=float)
    return np.stack([v[..., 0], v[..., 1], v[..., 2] - y * v[..., 0] + x * v[..., 1]], axis=-1)


def from_frame(p, c):
    """Frame coefficients c at p -> coordinate vector."""
    x, y, _ = (np.asarray(q, dtype=float) for q in p)
    c = np.asarray(c, dtype=float)
    return np.stack([c[..., 0], c[..., 1], c[..., 2] + y * c[..., 0] - x * c[..., 1]], axis=-1)


def J_op(v):
    f, g, _ = v
    return FrameVector(-np.asarray(g) * 1.0, np.asarray(f) * 1.0, np.zeros_like(np.asarray(f, dtype=float)))


def J_array(c):
    c = np.asarray(c, dtype=float)
    return np.stack([-c[..., 1], c[..., 0], np.zeros_like(c[..., 0])], axis=-1)


def contact_form(p, v):
    """omega = dt - y dx + x dy applied to a coordinate vector."""
    x, y, _ = p
    v = np.asarray(v, dtype=float)
    return v[..., 2] - y * v[..., 0] + x * v[..., 1]


# D_{E_i} E_j for E = (X, Y, T); row i is the direction, column j the field.
LEVI_CIVITA_TABLE = np.array([
    [[0, 0, 0], [0, 0, -1], [0, 1, 0]],    # D_X X, D_X Y, D_X T
    [[0, 0, 1], [0, 0, 0], [-1, 0, 0]],    # D_Y X, D_Y Y, D_Y T
    [[0, 1, 0], [-1, 0, 0], [0, 0, 0]],    # D_T X, D_T Y, D_T T
], dtype=float)


def _coefficient_derivative(field, s, step):
    s = np.asarray(s, dtype=float)
    plus = np.asarray(field(s + step), dtype=float)
    minus = np.asarray(field(s - step), dtype=float)
    return (plus - minus) / (2 * step)


def pseudo_hermitian_derivative(field, s, step=DEFAULT_FD_STEP):
    """Covariant derivative along a curve for the pseudo-hermitian connection.

    X, Y and T are parallel, so this is the derivative of the frame
    coefficients of ``field`` (a callable s -> (..., 3)).
    """
    return _coefficient_derivative(field, s, step)


def levi_civita_derivative(velocity, field, s, step=DEFAULT_FD_STEP):
    """D_{gamma'} V along a curve, from frame coefficients.

    ``velocity`` and ``field`` are callables returning frame coefficients of
    gamma'(s) and V(s).  The result is dV/ds + sum_ij v_i V_j D_{E_i} E_j.
    """
    s = np.asarray(s, dtype=float)
    vel = np.asarray(velocity(s), dtype=float)
    val = np.asarray(field(s), dtype=float)
    dval = _coefficient_derivative(field, s, step)
    if not np.all(np.isfinite(dval)):
        raise ValueError("field derivative is not finite; step too coarse or field not differentiable")
    return dval + np.einsum("...i,...j,ijk->...k", vel, val, LEVI_CIVITA_TABLE)


def cross(a, b):
    """Cross product of frame coefficient arrays ({X, Y, T} positively oriented)."""
    return np.cross(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
