"""First and second variation of the sub-Finsler area, formula against finite differences.

Surfaces are parametrized maps Phi: D -> H^1.  The area of any immersed
patch is

    A_K(Phi) = int_D || (Phi_x x Phi_t)_h ||_{K,*} dx dt,

with the cross product taken in the orthonormal frame {X, Y, T}.  For an
intrinsic graph Phi_x x Phi_t = p X - Y + u_t T, so this agrees with
:func:`sfh.graph_surface.subfinsler_area` by a separate code path.

A variation field U is fixed by frame coefficients at each surface point.
Those coefficients are frozen along the flow line, and a constant-coefficient
left-invariant field moves points along Euclidean straight lines:
phi_s(P) = P + s U(P) in coordinates.  Only the velocity at s = 0 enters the
first variation, and on stationary surfaces the acceleration does not enter
the second one either.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import convex_body as cb
from . import graph_surface as gs
from .bumps import Bump2D, FDScalar
from .errors import NotStationaryError, NumericalError
from .heisenberg import J_array, cross, from_frame, to_frame
from .quadrature import QuadratureSpec, Rect, integrate

DEFAULT_VARIATION_STEP = 1e-3
STATIONARY_TOL = 1e-6


# ------------------------------------------------------------------ surfaces

class ParamSurface:
    """A map Phi(x, t) with first derivatives, all as coordinate arrays (..., 3)."""

    domain: Rect

    def evaluate(self, x, t):
        """Return ``(Phi, Phi_x, Phi_t)``."""
        raise NotImplementedError

    def frame_normal(self, x, t):
        """Phi_x x Phi_t in frame coefficients."""
        P, Px, Pt = self.evaluate(x, t)
        pt = (P[..., 0], P[..., 1], P[..., 2])
        return cross(to_frame(pt, Px), to_frame(pt, Pt))


class GraphSurface(ParamSurface):
    def __init__(self, graph: gs.IntrinsicGraph):
        self.graph = graph
        self.domain = graph.domain

    def evaluate(self, x, t):
        x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
        u, ux, ut = self.graph.derivatives(x, t)
        one, zero = np.ones_like(x), np.zeros_like(x)
        P = np.stack([x, u, t - x * u], axis=-1)
        Px = np.stack([one, ux, -u - x * ux], axis=-1)
        Pt = np.stack([zero, ut, one - x * ut], axis=-1)
        return P, Px, Pt


def as_surface(surface) -> ParamSurface:
    return GraphSurface(surface) if isinstance(surface, gs.IntrinsicGraph) else surface


def unit_frame(surface: ParamSurface, x, t):
    """(nu_h, Z, |N_h|, <N,T>) from the surface's own normal; nu_h, Z in frame coefficients."""
    Nt = surface.frame_normal(x, t)
    nrm = np.linalg.norm(Nt, axis=-1)
    h = np.hypot(Nt[..., 0], Nt[..., 1])
    nu = np.zeros_like(Nt)
    nu[..., 0] = Nt[..., 0] / h
    nu[..., 1] = Nt[..., 1] / h
    Z = -J_array(nu)
    return nu, Z, h / nrm, Nt[..., 2] / nrm


@dataclass(frozen=True)
class VariationField:
    """U = bump * (c0 e0 + c1 e1 + c2 e2).

    ``basis`` is "surface" for (e0, e1, e2) = (Z, nu_h, T) of the surface being
    varied, or "frame" for (X, Y, T).
    """

    coeffs: tuple[float, float, float]
    bump: Bump2D
    basis: str = "surface"

    def __post_init__(self):
        if self.basis not in ("surface", "frame"):
            raise ValueError(f"unknown field basis {self.basis!r}")

    @property
    def horizontal(self):
        return self.coeffs[2] == 0

    @property
    def support(self):
        return self.bump.support

    def frame_coeffs(self, surface: ParamSurface, x, t):
        c0, c1, c2 = self.coeffs
        f = self.bump.value(x, t)
        if self.basis == "frame":
            out = np.stack([c0 * f, c1 * f, c2 * f], axis=-1)
        else:
            nu, Z, _, _ = unit_frame(surface, x, t)
            out = f[..., None] * (c0 * Z + c1 * nu + c2 * np.array([0.0, 0.0, 1.0]))
        return out

    def to_spec(self):
        return {"coeffs": list(self.coeffs), "basis": self.basis, "bump": self.bump.to_spec()}

    @classmethod
    def from_spec(cls, spec):
        return cls(tuple(float(c) for c in spec["coeffs"]), Bump2D.from_spec(spec["bump"]),
                   spec.get("basis", "surface"))


class FlowedSurface(ParamSurface):
    """phi_s applied to a base surface: Phi + s W with W the coordinate form of U."""

    def __init__(self, base: ParamSurface, field: VariationField, s: float, fd_step=5e-4):
        self.base = base
        self.field = field
        self.s = float(s)
        self.domain = base.domain
        self.fd_step = fd_step

    def _W(self, x, t):
        P, _, _ = self.base.evaluate(x, t)
        c = self.field.frame_coeffs(self.base, x, t)
        return from_frame((P[..., 0], P[..., 1], P[..., 2]), c)

    def evaluate(self, x, t):
        x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
        P, Px, Pt = self.base.evaluate(x, t)
        if self.s == 0.0:
            return P, Px, Pt
        h = self.fd_step
        W = self._W(x, t)
        Wx = (8 * (self._W(x + h, t) - self._W(x - h, t))
              - (self._W(x + 2 * h, t) - self._W(x - 2 * h, t))) / (12 * h)
        Wt = (8 * (self._W(x, t + h) - self._W(x, t - h))
              - (self._W(x, t + 2 * h) - self._W(x, t - 2 * h))) / (12 * h)
        return P + self.s * W, Px + self.s * Wx, Pt + self.s * Wt


def flow_surface(surface, field: VariationField, s: float, check_immersion_on=None) -> FlowedSurface:
    flowed = FlowedSurface(as_surface(surface), field, s)
    if check_immersion_on is not None:
        x, t = check_immersion_on
        if np.min(np.linalg.norm(flowed.frame_normal(x, t), axis=-1)) <= 1e-12:
            raise NumericalError(f"flowed surface at s={s} is no longer immersed")
    return flowed


def area_param(surface, body, quad: QuadratureSpec = QuadratureSpec(), rect: Rect | None = None):
    """int ||(Phi_x x Phi_t)_h||_{K,*} dx dt over ``rect`` (default: the whole domain)."""
    surface = as_surface(surface)
    rect = rect or surface.domain
    x, t, w = quad.nodes(rect)
    Nt = surface.frame_normal(x, t)
    if np.min(np.linalg.norm(Nt, axis=-1)) <= 1e-12:
        raise NumericalError("surface is not immersed at some quadrature node")
    return integrate(cb.dual_norm(body, Nt[..., :2]), w)


def _clip_rect(inner: Rect, outer: Rect) -> Rect:
    return Rect(max(inner.x0, outer.x0), min(inner.x1, outer.x1),
                max(inner.t0, outer.t0), min(inner.t1, outer.t1))


# ---------------------------------------------------------- first variation

def first_variation_fd(surface, field: VariationField, body, ds=DEFAULT_VARIATION_STEP,
                       quad: QuadratureSpec = QuadratureSpec()):
    """(A(ds) - A(-ds)) / (2 ds); only the support of U contributes to the difference."""
    if ds <= 0:
        raise ValueError("ds must be positive")
    surface = as_surface(surface)
    rect = _clip_rect(field.support, surface.domain)
    ap = area_param(flow_surface(surface, field, ds), body, quad, rect)
    am = area_param(flow_surface(surface, field, -ds), body, quad, rect)
    return (ap - am) / (2 * ds)


def normal_component(graph, field: VariationField, x, t):
    """<U, N~> with N~ = p X - Y + u_t T, so that <U,N> dS = <U,N~> dx dt."""
    surf = GraphSurface(graph)
    U = field.frame_coeffs(surf, x, t)
    return np.sum(U * surf.frame_normal(x, t), axis=-1)


def first_variation_formula(graph, field: VariationField, body,
                            quad: QuadratureSpec = QuadratureSpec(), step=gs.DEFAULT_FD_STEP):
    """int <U,N> H_K dS."""
    rect = _clip_rect(field.support, graph.domain)
    x, t, w = quad.nodes(rect)
    H = gs.mean_curvature_K(graph, body, x, t, step)
    return integrate(normal_component(graph, field, x, t) * H, w)


def F_function(body, x, step=1e-6):
    """F(x) = pi_1(x,-1) + x d/dx pi_1(x,-1) - d/dx pi_2(x,-1), derivatives by central differences."""
    x = np.asarray(x, dtype=float)
    one = -np.ones_like(x)
    pi = cb.pi_K(body, np.stack([x, one], axis=-1))
    dpi = (cb.pi_K(body, np.stack([x + step, one], axis=-1))
           - cb.pi_K(body, np.stack([x - step, one], axis=-1))) / (2 * step)
    return pi[..., 0] + x * dpi[..., 0] - dpi[..., 1]


def first_variation_graph(graph, v, body, quad: QuadratureSpec = QuadratureSpec()):
    """d/ds A(Gr(u + s v)) = int (v_x + 2 v u_t + 2 u v_t) F(u_x + 2 u u_t) dx dt.

    ``v`` provides ``value``, ``grad`` and ``support``.
    """
    rect = _clip_rect(v.support, graph.domain)
    x, t, w = quad.nodes(rect)
    u, ux, ut = graph.derivatives(x, t)
    val = v.value(x, t)
    vx, vt = v.grad(x, t)
    M = F_function(body, ux + 2 * u * ut)
    return integrate((vx + 2 * val * ut + 2 * u * vt) * M, w)


def equivalent_graph_perturbation(graph, field: VariationField) -> FDScalar:
    """v = -<U, N~>: the Y-directed perturbation u + s v with the same normal speed."""
    return FDScalar(lambda x, t: -normal_component(graph, field, x, t), field.support)


# --------------------------------------------------------- second variation

def q_function(graph, x, t, step=gs.DEFAULT_FD_STEP):
    """q = 4 (Z(<N,T>/|N_h|) - <N,T>^2/|N_h|^2)."""
    y = gs.nt_over_nh(graph, x, t)
    zy = gs.z_derivative(graph, lambda xx, tt: gs.nt_over_nh(graph, xx, tt), x, t, step)
    return 4 * (zy - y**2)


def pointwise_stationarity(graph, x, t, step=gs.DEFAULT_FD_STEP):
    """max |Z(p)| at the given points; zero iff p is constant along characteristics there."""
    zp = gs.z_derivative(graph, lambda xx, tt: gs.shift_p(graph, xx, tt), x, t, step)
    return float(np.max(np.abs(zp)))


def require_stationary(graph, x, t, tol=STATIONARY_TOL):
    res = pointwise_stationarity(graph, x, t)
    if res > tol:
        raise NotStationaryError(f"graph {graph.name!r} is not area-stationary (max |Z(p)| = {res:.3g})")
    return res


def second_variation_integrand(graph, f, body, x, t, step=gs.DEFAULT_FD_STEP):
    """(Z(f)^2 + q f^2) sqrt(1+p^2)/kappa(pi_K(nu_h)) at points; Z(f) along characteristics."""
    fv = f.value(x, t)
    zf = gs.z_derivative(graph, f.value, x, t, step)
    q = q_function(graph, x, t, step)
    p = gs.shift_p(graph, x, t)
    kappa = cb.boundary_curvature(body, gs.horizontal_normal(p))
    return (zf**2 + q * fv**2) * np.sqrt(1 + p**2) / kappa


def second_variation_formula(graph, f, body, quad: QuadratureSpec = QuadratureSpec(),
                             step=gs.DEFAULT_FD_STEP, check=True):
    """int (Z(f)^2 + q f^2) |N_h| / kappa(pi_K(nu_h)) dS for U = f nu_h."""
    rect = _clip_rect(f.support, graph.domain)
    x, t, w = quad.nodes(rect)
    if check:
        require_stationary(graph, x, t)
    return integrate(second_variation_integrand(graph, f, body, x, t, step), w)


def second_variation_fd(surface, field: VariationField, body, ds=DEFAULT_VARIATION_STEP,
                        quad: QuadratureSpec = QuadratureSpec(), richardson=True):
    """(A(ds) - 2 A(0) + A(-ds)) / ds^2, Richardson-extrapolated with ds/2 by default."""
    if not field.horizontal:
        raise ValueError("second variation is only checked for horizontal fields")
    surface = as_surface(surface)
    rect = _clip_rect(field.support, surface.domain)

    def area(s):
        return area_param(flow_surface(surface, field, s), body, quad, rect)

    a0 = area(0.0)

    def d2(h):
        return (area(h) - 2 * a0 + area(-h)) / h**2

    if not richardson:
        return d2(ds)
    return (4 * d2(ds / 2) - d2(ds)) / 3


# ------------------------------------------------- integration by parts

class IBPResiduals(NamedTuple):
    plain: float     # int (Z(h) - 2 y h) |N_h| dS
    dual: float      # same with ||N_h||_*
    e_form: float    # int pi_nu E(h) + pi_Z theta(E) h dS


def pi_decomposition(graph, body, x, t):
    """(pi_Z, pi_nu) with pi_K(nu_h) = pi_Z Z + pi_nu nu_h."""
    fr = gs.surface_frame(graph, x, t)
    pi = cb.pi_K(body, fr.nu_h[..., :2])
    return np.sum(pi * fr.Z[..., :2], axis=-1), np.sum(pi * fr.nu_h[..., :2], axis=-1)


def integration_by_parts_residuals(graph, h, body, quad: QuadratureSpec = QuadratureSpec(),
                                   step=gs.DEFAULT_FD_STEP) -> IBPResiduals:
    rect = _clip_rect(h.support, graph.domain)
    x, t, w = quad.nodes(rect)
    u, ux, ut = graph.derivatives(x, t)
    p = ux + 2 * u * ut
    r = np.sqrt(1 + p**2)
    hv = h.value(x, t)
    hx, ht = h.grad(x, t)
    zh = -(hx + 2 * u * ht) / r
    y = ut / r
    base = (zh - 2 * y * hv) * r
    pi_z, pi_nu = pi_decomposition(graph, body, x, t)
    alpha, beta = gs.e_direction(graph, x, t)
    eh = alpha * hx + beta * ht
    th_e = gs.theta(graph, "E", x, t, step)
    dS = np.sqrt(1 + p**2 + ut**2)
    return IBPResiduals(integrate(base, w), integrate(base * pi_nu, w),
                        integrate((pi_nu * eh + pi_z * th_e * hv) * dS, w))
