"""Characteristic curves of intrinsic graphs and ruled stationary graphs.

The (x, t) projection of a horizontal curve in Gr(u) solves t' = 2u(x, t).
Curves are labelled by eps = t at x = base_x and parametrized by
s = x - base_x.  On an area-stationary graph the shift p is constant along
each curve and

    t_eps(s) = eps + a(eps) s + b(eps) s^2,    a = 2 u(base_x, eps),  b = p(base_x, eps),

so that u = a/2 + b s along the line.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DomainError, NumericalError
from .graph_surface import IntrinsicGraph, embed, shift_p
from .heisenberg import contact_form
from .quadrature import Rect

DEFAULT_ODE_STEP = 1e-3
NEWTON_TOL = 1e-12


@dataclass(frozen=True)
class CharacteristicCurve:
    eps: float
    s: np.ndarray
    t: np.ndarray
    u: np.ndarray
    p: np.ndarray
    step: float
    base_x: float = 0.0
    method: str = "rk4"
    truncated: bool = False

    @property
    def x(self):
        return self.base_x + self.s


def _rk4_grid(graph, base_x, eps, s_end, step):
    """Integrate all curves in ``eps`` from s = 0 to s_end; returns (s, t[n_s, n_eps], alive)."""
    n = max(1, int(np.ceil(abs(s_end) / step - 1e-9)))
    h = s_end / n
    d = graph.domain
    t = np.array(eps, dtype=float)
    ts = [t.copy()]
    alive = [d.contains(np.full_like(t, base_x), t, 1e-12)]

    def f(x, tt):
        if not graph.extrapolates:
            tt = np.clip(tt, d.t0, d.t1)
            x = np.clip(x, d.x0, d.x1)
        return 2 * graph(np.full_like(tt, x), tt)

    x = base_x
    for _ in range(n):
        k1 = f(x, t)
        k2 = f(x + h / 2, t + h * k1 / 2)
        k3 = f(x + h / 2, t + h * k2 / 2)
        k4 = f(x + h, t + h * k3)
        t = t + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6
        x = x + h
        ts.append(t.copy())
        alive.append(alive[-1] & d.contains(np.full_like(t, x), t, 1e-12))
    s = h * np.arange(n + 1)
    return s, np.array(ts), np.array(alive)


def integrate_characteristics(graph: IntrinsicGraph, eps, s_range=None, step=DEFAULT_ODE_STEP,
                              base_x=0.0):
    """RK4 solutions of t' = 2u(base_x + s, t), t(0) = eps, for every eps.

    Curves are truncated at the boundary of the domain.  ``s_range`` defaults
    to the full x-range of the domain.
    """
    d = graph.domain
    eps = np.atleast_1d(np.asarray(eps, dtype=float))
    if not (d.x0 <= base_x <= d.x1):
        raise DomainError(f"base_x={base_x} outside the domain x-range [{d.x0}, {d.x1}]")
    if np.any(~d.contains(np.full_like(eps, base_x), eps)):
        raise DomainError(f"starting points (base_x, eps) leave the domain for eps={eps}")
    lo, hi = s_range if s_range is not None else (d.x0 - base_x, d.x1 - base_x)
    lo, hi = max(lo, d.x0 - base_x), min(hi, d.x1 - base_x)
    pieces = []
    for end in (lo, hi):
        if end == 0:
            pieces.append((np.zeros(1), eps[None, :], np.ones((1, eps.size), bool)))
        else:
            pieces.append(_rk4_grid(graph, base_x, eps, end, step))
    (sb, tb, ab), (sf, tf, af) = pieces
    s = np.concatenate([sb[::-1], sf[1:]])
    T = np.concatenate([tb[::-1], tf[1:]])
    A = np.concatenate([ab[::-1], af[1:]])
    curves = []
    for j, e in enumerate(eps):
        # keep the connected run of in-domain samples containing s = 0
        i0 = sb.size - 1
        keep = np.zeros(s.size, bool)
        i = i0
        while i >= 0 and A[i, j]:
            keep[i] = True
            i -= 1
        i = i0 + 1
        while i < s.size and A[i, j]:
            keep[i] = True
            i += 1
        ss, tt = s[keep], T[keep, j]
        if ss.size < 2:
            raise DomainError(f"characteristic eps={e} leaves the domain immediately")
        xx = base_x + ss
        u = graph(xx, tt)
        p = shift_p(graph, xx, tt)
        curves.append(CharacteristicCurve(float(e), ss, tt, u, p, step, base_x,
                                          truncated=bool(keep.sum() < s.size)))
    return curves


def integrate_characteristic(graph, eps, s_range=None, step=DEFAULT_ODE_STEP, base_x=0.0):
    return integrate_characteristics(graph, [eps], s_range, step, base_x)[0]


def monotonicity_check(graph, eps_grid, s_range=None, step=DEFAULT_ODE_STEP, base_x=0.0):
    """Minimum over s and adjacent eps of (t_{eps_k+1}(s) - t_{eps_k}(s)) / d eps.

    A non-positive value means neighbouring characteristics cross.
    """
    eps_grid = np.sort(np.asarray(eps_grid, dtype=float))
    curves = integrate_characteristics(graph, eps_grid, s_range, step, base_x)
    best = np.inf
    for c0, c1 in zip(curves[:-1], curves[1:]):
        common, i0, i1 = np.intersect1d(np.round(c0.s / step).astype(np.int64),
                                        np.round(c1.s / step).astype(np.int64),
                                        return_indices=True)
        if common.size == 0:
            continue
        q = (c1.t[i1] - c0.t[i0]) / (c1.eps - c0.eps)
        best = min(best, float(q.min()))
    return best


def stationarity_residual(graph, eps_grid, s_range=None, step=DEFAULT_ODE_STEP, base_x=0.0):
    """max over curves of (max p - min p) along the curve; ~0 for stationary graphs."""
    curves = integrate_characteristics(graph, eps_grid, s_range, step, base_x)
    return max(float(np.ptp(c.p)) for c in curves)


def embedded_points(graph, curve: CharacteristicCurve):
    P = embed(graph, curve.x, curve.t)
    return np.stack([np.asarray(c, dtype=float) for c in P], axis=-1)


def line_check(graph, curve: CharacteristicCurve):
    """(max distance of Gamma(s) from its best-fit line, max |omega(Gamma')|).

    Gamma' is assembled from x' = 1, t' = 2u and the graph derivatives.
    """
    pts = embedded_points(graph, curve)
    centred = pts - pts.mean(axis=0)
    _, _, vt = np.linalg.svd(centred, full_matrices=False)
    direction = vt[0]
    resid = centred - np.outer(centred @ direction, direction)
    line_res = float(np.max(np.linalg.norm(resid, axis=1)))

    x, t = curve.x, curve.t
    u, ux, ut = graph.derivatives(x, t)
    dt = 2 * u
    dy = ux + ut * dt
    vel = np.stack([np.ones_like(x), dy, dt - u - x * dy], axis=-1)
    omega = contact_form((x, u, t - x * u), vel)
    return line_res, float(np.max(np.abs(omega)))


def quadratic_fit_residual(curve: CharacteristicCurve):
    """Max residual of a least-squares quadratic fit of t_eps(s)."""
    coef = np.polynomial.polynomial.polyfit(curve.s, curve.t, 2)
    return float(np.max(np.abs(np.polynomial.polynomial.polyval(curve.s, coef) - curve.t)))


# ---------------------------------------------------------------- ruling data

@dataclass(frozen=True)
class RulingData:
    eps: np.ndarray
    a: np.ndarray
    b: np.ndarray
    base_x: float = 0.0

    def __post_init__(self):
        e = np.asarray(self.eps, dtype=float)
        if e.ndim != 1 or e.size < 2 or np.any(np.diff(e) <= 0):
            raise ValueError("ruling eps grid must be strictly increasing with >= 2 points")
        if np.shape(self.a) != e.shape or np.shape(self.b) != e.shape:
            raise ValueError("ruling a and b must match the eps grid")

    def derivatives(self):
        """Central-difference a'(eps), b'(eps) on the grid."""
        edge = 2 if self.eps.size > 2 else 1
        return (np.gradient(self.a, self.eps, edge_order=edge),
                np.gradient(self.b, self.eps, edge_order=edge))

    def lipschitz_bounds(self):
        da, db = np.diff(self.a) / np.diff(self.eps), np.diff(self.b) / np.diff(self.eps)
        return float(np.max(np.abs(da))), float(np.max(np.abs(db)))

    def to_json(self) -> dict:
        return {"base_x": float(self.base_x), "eps": [float(v) for v in self.eps],
                "a": [float(v) for v in self.a], "b": [float(v) for v in self.b]}

    @classmethod
    def from_json(cls, data: dict) -> "RulingData":
        return cls(np.asarray(data["eps"], float), np.asarray(data["a"], float),
                   np.asarray(data["b"], float), float(data.get("base_x", 0.0)))

    def dumps(self):
        return json.dumps(self.to_json())


def ruling_from_graph(graph, eps_grid, base_x=0.0) -> RulingData:
    eps = np.asarray(eps_grid, dtype=float)
    x = np.full_like(eps, base_x)
    return RulingData(eps, 2 * graph(x, eps), shift_p(graph, x, eps), base_x)


class RuledGraph(IntrinsicGraph):
    """Graph swept by the lines t = eps + a(eps) s + b(eps) s^2, u = a/2 + b s.

    a and b are cubic-spline interpolants of the ruling data; eps(x, t) is
    recovered by Newton iteration with a bisection fallback.
    """

    def __init__(self, ruling: RulingData, domain: Rect, name="ruled"):
        super().__init__(domain, name=name)
        self.ruling = ruling
        self._a = CubicSpline(ruling.eps, ruling.a)
        self._b = CubicSpline(ruling.eps, ruling.b)
        self._check_monotone()

    def _jac(self, eps, s):
        return 1 + self._a(eps, 1) * s + self._b(eps, 1) * s**2

    def _check_monotone(self, n=201):
        d = self.domain
        s = np.linspace(d.x0, d.x1, n) - self.ruling.base_x
        e = np.linspace(self.ruling.eps[0], self.ruling.eps[-1], n)
        S, Eg = np.meshgrid(s, e, indexing="ij")
        J = self._jac(Eg, S)
        if J.min() <= 0:
            i, j = np.unravel_index(np.argmin(J), J.shape)
            raise DomainError(
                f"eps -> eps + a(eps) x + b(eps) x^2 is not increasing at "
                f"(x, eps) = ({S[i, j] + self.ruling.base_x:.6g}, {Eg[i, j]:.6g})"
            )

    def invert(self, x, t, maxiter=60):
        s = np.asarray(x, dtype=float) - self.ruling.base_x
        t = np.asarray(t, dtype=float)
        e = t.copy()
        lo_e, hi_e = self.ruling.eps[0], self.ruling.eps[-1]

        def resid(ee):
            return ee + self._a(ee) * s + self._b(ee) * s**2 - t

        for _ in range(maxiter):
            step = resid(e) / self._jac(e, s)
            e = e - step
            if np.all(np.abs(step) <= NEWTON_TOL * (1 + np.abs(e))):
                break
        bad = ~np.isfinite(e) | (np.abs(resid(e)) > 1e-10 * (1 + np.abs(t)))
        if np.any(bad):
            e = np.where(bad, self._bisect(s, t, lo_e, hi_e, bad), e)
        return e

    def _bisect(self, s, t, lo, hi, mask):
        s, t = np.broadcast_arrays(s, t)
        a = np.full(s.shape, lo)
        b = np.full(s.shape, hi)

        def g(ee):
            return ee + self._a(ee) * s + self._b(ee) * s**2 - t

        ga = g(a)
        if np.any(mask & (ga * g(b) > 0)):
            idx = np.argwhere(mask & (ga * g(b) > 0))[0]
            raise NumericalError(f"ruled graph inversion failed at (x, t) = "
                                 f"({s[tuple(idx)] + self.ruling.base_x:.6g}, {t[tuple(idx)]:.6g})")
        for _ in range(200):
            m = 0.5 * (a + b)
            gm = g(m)
            left = ga * gm <= 0
            b = np.where(left, m, b)
            a = np.where(left, a, m)
            ga = np.where(left, ga, gm)
        return 0.5 * (a + b)

    def derivatives(self, x, t):
        x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
        e = self.invert(x, t)
        s = x - self.ruling.base_x
        a, b = self._a(e), self._b(e)
        da, db = self._a(e, 1), self._b(e, 1)
        jac = 1 + da * s + db * s**2
        g = da / 2 + db * s
        u = a / 2 + b * s
        return u, b - g * (a + 2 * b * s) / jac, g / jac

    def to_spec(self):
        d = self.domain
        spec = {"type": "ruling"}
        spec.update(self.ruling.to_json())
        spec.update({"x0": d.x0, "x1": d.x1, "t0": d.t0, "t1": d.t1})
        return spec


def build_ruled_graph(ruling: RulingData, domain: Rect) -> RuledGraph:
    return RuledGraph(ruling, domain)
