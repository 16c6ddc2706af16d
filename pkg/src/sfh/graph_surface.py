"""Intrinsic graphs Gr(u) = {(x, u(x,t), t - x u(x,t))} over the plane {y = 0}.

With p = u_x + 2 u u_t (the "shift") the parametrization by (x, t) has

    Phi_x x Phi_t = N~ = p X - Y + u_t T,      |N_h| dS = sqrt(1 + p^2) dx dt,

so nu_h = (p X - Y)/sqrt(1 + p^2) and Z = -J(nu_h) = -(X + p Y)/sqrt(1 + p^2).
The projection of Z to the (x, t) plane is -(1, 2u)/sqrt(1 + p^2): Z-derivatives
are derivatives along the characteristic curves t' = 2u.
"""
from __future__ import annotations

import csv
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy.interpolate import RectBivariateSpline

from . import convex_body as cb
from .errors import DomainError, NumericalError
from .heisenberg import DEFAULT_FD_STEP, HPoint
from .quadrature import QuadratureSpec, Rect, integrate


class IntrinsicGraph:
    """A function u on a rectangle of the (x, t) plane with first derivatives.

    Subclasses implement :meth:`derivatives`.  ``extrapolates`` says whether
    u may be evaluated slightly outside the rectangle (closed forms can,
    grid data cannot).
    """

    extrapolates = True

    def __init__(self, domain: Rect, name: str = ""):
        self.domain = domain
        self.name = name

    def derivatives(self, x, t):
        """Return ``(u, u_x, u_t)`` at the given points (broadcast arrays)."""
        raise NotImplementedError

    def __call__(self, x, t):
        return self.derivatives(x, t)[0]

    def to_spec(self) -> dict:
        raise NotImplementedError

    def check_inside(self, x, t, tol=1e-12):
        if self.extrapolates:
            return
        if not np.all(self.domain.contains(x, t, tol)):
            raise DomainError(f"graph {self.name!r}: evaluation outside the domain {self.domain}")

    def lipschitz_bound(self, n=101):
        """Max |grad u| over a sample grid: a recorded estimate, not a proof."""
        d = self.domain
        X, Tg = np.meshgrid(np.linspace(d.x0, d.x1, n), np.linspace(d.t0, d.t1, n), indexing="ij")
        _, ux, ut = self.derivatives(X, Tg)
        return float(np.max(np.hypot(ux, ut)))


class ClosedFormGraph(IntrinsicGraph):
    def __init__(self, domain, graph_id, func, params=None):
        super().__init__(domain, name=graph_id)
        self.graph_id = graph_id
        self._func = func
        self.params = dict(params or {})

    def derivatives(self, x, t):
        x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
        return self._func(x, t)

    def to_spec(self):
        spec = {"type": "closed_form", "id": self.graph_id}
        spec.update(self.params)
        return spec


def _zero(x, t):
    z = np.zeros_like(x)
    return z, z.copy(), z.copy()


def _xt_over_1px2(x, t):
    d = 1.0 + x**2
    return x * t / d, t * (1 - x**2) / d**2, x / d


def zero_graph(domain) -> ClosedFormGraph:
    return ClosedFormGraph(domain, "zero", _zero)


def affine_graph(domain, a, b) -> ClosedFormGraph:
    """u = a/2 + b x, a vertical plane (a, b in ruling notation)."""
    def f(x, t):
        return a / 2 + b * x, np.full_like(x, b), np.zeros_like(x)

    return ClosedFormGraph(domain, "affine", f, {"a": a, "b": b})


def xt_graph(domain) -> ClosedFormGraph:
    """u = x t / (1 + x^2): stationary, ruled, not a plane."""
    return ClosedFormGraph(domain, "xt_over_1px2", _xt_over_1px2)


def poly_graph(domain, coeffs) -> ClosedFormGraph:
    """u = sum_ij c[i][j] x^i t^j."""
    from numpy.polynomial import polynomial as P

    c = np.atleast_2d(np.asarray(coeffs, dtype=float))
    cx = P.polyder(c, axis=0) if c.shape[0] > 1 else np.zeros((1, c.shape[1]))
    ct = P.polyder(c, axis=1) if c.shape[1] > 1 else np.zeros((c.shape[0], 1))

    def f(x, t):
        return P.polyval2d(x, t, c), P.polyval2d(x, t, cx), P.polyval2d(x, t, ct)

    return ClosedFormGraph(domain, "custom_poly", f, {"coeffs": c.tolist()})


def rational_ruled_graph(domain, alpha, beta) -> ClosedFormGraph:
    """Stationary graph with ruling a(eps) = alpha eps, b(eps) = beta eps.

    Lines t = eps (1 + alpha x + beta x^2) give
    u = t (alpha/2 + beta x) / (1 + alpha x + beta x^2).
    """
    def f(x, t):
        d = 1 + alpha * x + beta * x**2
        n = alpha / 2 + beta * x
        u = t * n / d
        ux = t * (beta * d - n * (alpha + 2 * beta * x)) / d**2
        return u, ux, n / d

    x = np.linspace(domain.x0, domain.x1, 2001)
    if np.min(1 + alpha * x + beta * x**2) <= 0:
        raise DomainError("1 + alpha x + beta x^2 must stay positive on the domain")
    return ClosedFormGraph(domain, "rational_ruled", f, {"alpha": alpha, "beta": beta})


class GridGraph(IntrinsicGraph):
    """u sampled on a uniform (x, t) grid.

    Derivatives come from central differences in the interior and one-sided
    differences on the boundary; values and derivatives are then
    interpolated with bicubic splines.
    """

    extrapolates = False

    def __init__(self, domain, values, name="grid", source=None):
        super().__init__(domain, name=name)
        values = np.asarray(values, dtype=float)
        nx, nt = values.shape
        if nx < 4 or nt < 4:
            raise ValueError("grid graphs need at least 4 samples per axis")
        self.values = values
        self.source = source
        self.xs = np.linspace(domain.x0, domain.x1, nx)
        self.ts = np.linspace(domain.t0, domain.t1, nt)
        ux = np.gradient(values, self.xs, axis=0, edge_order=1)
        ut = np.gradient(values, self.ts, axis=1, edge_order=1)
        self._splines = [RectBivariateSpline(self.xs, self.ts, a, kx=3, ky=3) for a in (values, ux, ut)]

    def derivatives(self, x, t):
        x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
        self.check_inside(x, t, tol=1e-9)
        return tuple(s.ev(x, t) for s in self._splines)

    @property
    def spacing(self):
        return self.xs[1] - self.xs[0], self.ts[1] - self.ts[0]

    def to_spec(self):
        d = self.domain
        nx, nt = self.values.shape
        return {"type": "grid", "x0": d.x0, "x1": d.x1, "t0": d.t0, "t1": d.t1,
                "nx": nx, "nt": nt, "values": str(self.source) if self.source else None}


def read_grid_csv(path, nx, nt):
    """Row-major u values, one grid row (fixed x index) per CSV line."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if row and not row[0].lstrip().startswith("#"):
                rows.append([float(v) for v in row if v.strip() != ""])
    flat = [v for r in rows for v in r]
    if len(flat) != nx * nt:
        raise ValueError(
            f"grid CSV {Path(path).name}: expected nx*nt = {nx}*{nt} = {nx * nt} values, got "
            f"{len(flat)} ({len(rows)} rows)"
        )
    return np.array(flat).reshape(nx, nt)


# ------------------------------------------------------------------ geometry

class SurfaceFrame(NamedTuple):
    """Surface frame at points of a graph; vectors are frame coefficient arrays (..., 3)."""

    N: np.ndarray
    N_h: np.ndarray
    N_h_norm: np.ndarray
    N_T: np.ndarray
    nu_h: np.ndarray
    Z: np.ndarray
    E: np.ndarray


def embed(graph: IntrinsicGraph, x, t) -> HPoint:
    graph.check_inside(x, t)
    u = graph(x, t)
    return HPoint(np.asarray(x, dtype=float) * 1.0, u, t - x * u)


def shift_p(graph, x, t):
    u, ux, ut = graph.derivatives(x, t)
    return ux + 2 * u * ut


def area_element(graph, x, t):
    """sqrt(1 + p^2), i.e. |N_h| dS / (dx dt)."""
    return np.sqrt(1 + shift_p(graph, x, t) ** 2)


def horizontal_normal(p):
    """nu_h as plane coefficients (p, -1)/sqrt(1 + p^2)."""
    r = np.sqrt(1 + p**2)
    return np.stack([p / r, -1 / r], axis=-1)


def surface_frame(graph, x, t) -> SurfaceFrame:
    u, ux, ut = graph.derivatives(x, t)
    p = ux + 2 * u * ut
    Nt = np.stack([p, -np.ones_like(p), ut], axis=-1)
    norm = np.linalg.norm(Nt, axis=-1)
    N = Nt / norm[..., None]
    r = np.sqrt(1 + p**2)
    zero = np.zeros_like(p)
    nu = np.stack([p / r, -1 / r, zero], axis=-1)
    Z = np.stack([-1 / r, -p / r, zero], axis=-1)
    N_h_norm = r / norm
    N_T = ut / norm
    E = N_T[..., None] * nu - N_h_norm[..., None] * np.array([0.0, 0.0, 1.0])
    N_h = N.copy()
    N_h[..., 2] = 0.0
    return SurfaceFrame(N, N_h, N_h_norm, N_T, nu, Z, E)


def nt_over_nh(graph, x, t):
    """<N,T>/|N_h| = u_t / sqrt(1 + p^2)."""
    u, ux, ut = graph.derivatives(x, t)
    return ut / np.sqrt(1 + (ux + 2 * u * ut) ** 2)


def char_step(graph, x, t, ds):
    """One classical RK4 step of dt/dx = 2u(x, t) from (x, t) to x + ds."""
    def f(xx, tt):
        return 2 * graph(xx, tt)

    k1 = f(x, t)
    k2 = f(x + ds / 2, t + ds * k1 / 2)
    k3 = f(x + ds / 2, t + ds * k2 / 2)
    k4 = f(x + ds, t + ds * k3)
    return x + ds, t + ds * (k1 + 2 * k2 + 2 * k3 + k4) / 6


def z_derivative(graph, fn, x, t, step=DEFAULT_FD_STEP):
    """Z(fn) by a central difference along the characteristic through (x, t).

    ``fn`` maps (x, t) arrays to values of shape (...) or (..., k).
    """
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    xp, tp = char_step(graph, x, t, step)
    xm, tm = char_step(graph, x, t, -step)
    graph.check_inside(np.stack([xp, xm]), np.stack([tp, tm]))
    d = (np.asarray(fn(xp, tp)) - np.asarray(fn(xm, tm))) / (2 * step)
    zx = -1.0 / area_element(graph, x, t)
    if d.ndim > zx.ndim:
        zx = zx[..., None]
    return zx * d


def z_derivative_from_gradient(graph, fx, ft, x, t):
    """Z(f) = -(f_x + 2u f_t)/sqrt(1 + p^2) from an analytic gradient."""
    u, ux, ut = graph.derivatives(x, t)
    return -(fx + 2 * u * ft) / np.sqrt(1 + (ux + 2 * u * ut) ** 2)


def e_direction(graph, x, t):
    """(x, t)-plane components (alpha, beta) with E = alpha Phi_x + beta Phi_t."""
    fr = surface_frame(graph, x, t)
    u = graph(x, t)
    alpha = fr.E[..., 0]
    return alpha, fr.E[..., 2] + 2 * u * alpha


def e_derivative(graph, fn, x, t, step=DEFAULT_FD_STEP):
    """E(fn) by a central difference along the E direction in the (x, t) plane."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    a, b = e_direction(graph, x, t)
    graph.check_inside(np.stack([x + step * a, x - step * a]), np.stack([t + step * b, t - step * b]))
    d = (np.asarray(fn(x + step * a, t + step * b)) - np.asarray(fn(x - step * a, t - step * b))) / (2 * step)
    return d


def nu_h_plane(graph, x, t):
    return horizontal_normal(shift_p(graph, x, t))


def pi_of_nu(graph, body, x, t):
    return cb.pi_K(body, nu_h_plane(graph, x, t))


def mean_curvature_K(graph, body, x, t, step=DEFAULT_FD_STEP):
    """H_K = <Z(pi_K(nu_h)), Z>, with X and Y parallel for the connection."""
    dpi = z_derivative(graph, lambda xx, tt: pi_of_nu(graph, body, xx, tt), x, t, step)
    Z = surface_frame(graph, x, t).Z
    return np.sum(dpi * Z[..., :2], axis=-1)


def theta(graph, direction, x, t, step=DEFAULT_FD_STEP):
    """theta(W) = <grad_W nu_h, Z> for W in {"Z", "E"}."""
    nu = lambda xx, tt: nu_h_plane(graph, xx, tt)  # noqa: E731
    if direction == "Z":
        d = z_derivative(graph, nu, x, t, step)
    elif direction == "E":
        d = e_derivative(graph, nu, x, t, step)
    else:
        raise ValueError(f"direction must be 'Z' or 'E', got {direction!r}")
    Z = surface_frame(graph, x, t).Z
    return np.sum(d * Z[..., :2], axis=-1)


def theta_E_identity(graph, x, t, step=DEFAULT_FD_STEP):
    """Right-hand side -|N_h| Z(<N,T>/|N_h|) + 2 <N,T>^2/|N_h|."""
    fr = surface_frame(graph, x, t)
    zy = z_derivative(graph, lambda xx, tt: nt_over_nh(graph, xx, tt), x, t, step)
    return -fr.N_h_norm * zy + 2 * fr.N_T**2 / fr.N_h_norm


def subfinsler_area(graph, body, quad: QuadratureSpec = QuadratureSpec(), rect: Rect | None = None):
    """int_D p pi_1(p,-1) - pi_2(p,-1) dx dt, i.e. int ||N_h||_{K,*} dS."""
    rect = rect or graph.domain
    x, t, w = quad.nodes(rect)
    p = shift_p(graph, x, t)
    v = np.stack([p, -np.ones_like(p)], axis=-1)
    pi = cb.pi_K(body, v)
    vals = p * pi[:, 0] - pi[:, 1]
    if not np.all(np.isfinite(vals)):
        raise NumericalError("NaN in area integrand")
    return integrate(vals, w)


def sub_riemannian_area(graph, quad: QuadratureSpec = QuadratureSpec(), rect: Rect | None = None):
    """int_D sqrt(1 + p^2) dx dt (the disk case, computed without pi_K)."""
    rect = rect or graph.domain
    x, t, w = quad.nodes(rect)
    return integrate(area_element(graph, x, t), w)


def min_horizontal_normal(graph, n=101):
    """min |N_h| over a sample grid together with the lower bound 1/sqrt(1+L^2+|u_t|^2)."""
    d = graph.domain
    X, Tg = np.meshgrid(np.linspace(d.x0, d.x1, n), np.linspace(d.t0, d.t1, n), indexing="ij")
    fr = surface_frame(graph, X, Tg)
    _, _, ut = graph.derivatives(X, Tg)
    L = np.max(np.abs(shift_p(graph, X, Tg)))
    bound = 1 / np.sqrt(1 + L**2 + np.max(np.abs(ut)) ** 2)
    return float(fr.N_h_norm.min()), float(bound)
