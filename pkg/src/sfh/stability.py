"""Stability quadratic form, a 1-D Hardy test, eigen-search for negative directions.

Q(f) = int (Z(f)^2 + q f^2) sqrt(1+p^2) / kappa(pi_K(nu_h)) dx dt on a
stationary intrinsic graph.  A finite tensor basis gives a generalized
eigenproblem Q c = lam M c with M the weighted L^2 Gram matrix; a negative
lam comes with an explicit witness f.  A nonnegative minimum only says no
instability was found at that resolution.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import convex_body as cb
from . import graph_surface as gs
from .characteristic import integrate_characteristics, ruling_from_graph
from .errors import DomainError, NumericalError
from .quadrature import QuadratureSpec, Rect, gauss_legendre_edges, integrate
from .variation import q_function, second_variation_formula

NEG_TOL = 1e-8
STATIONARY_TOL = 1e-6
PLANAR_TOL = 1e-6
PLANE_FIT_TOL = 1e-8
DEFAULT_BASIS = (12, 12)


def stability_form(graph, body, f, quad: QuadratureSpec = QuadratureSpec(), step=gs.DEFAULT_FD_STEP):
    """Q(f); raises NotStationaryError on non-stationary graphs."""
    return second_variation_formula(graph, f, body, quad, step, check=True)


# ------------------------------------------------------------------ 1-D Hardy

class Test1D:
    """A compactly supported C^1 function on the line.

    ``breaks`` lists interior points where the second derivative jumps;
    quadrature cells are aligned with them.
    """

    def __init__(self, value, deriv, support, breaks=()):
        self.value = value
        self.deriv = deriv
        self.support = (float(support[0]), float(support[1]))
        self.breaks = tuple(float(b) for b in breaks)


def cutoff_rational(L, center=0.0):
    """psi(s) = (1 - r^2)^2 / (1 + (s - center)^2), r = (s - center)/L, zero for |r| >= 1."""

    def value(s):
        z = np.asarray(s, dtype=float) - center
        r = z / L
        c = np.where(np.abs(r) < 1, (1 - r**2) ** 2, 0.0)
        return c / (1 + z**2)

    def deriv(s):
        z = np.asarray(s, dtype=float) - center
        r = z / L
        inside = np.abs(r) < 1
        c = np.where(inside, (1 - r**2) ** 2, 0.0)
        dc = np.where(inside, -4 * r * (1 - r**2) / L, 0.0)
        return dc / (1 + z**2) - c * 2 * z / (1 + z**2) ** 2

    return Test1D(value, deriv, (center - L, center + L))


def random_bump_sum(rng, support, n_bumps=4):
    """Sum of cos^2 bumps with random centres, widths and amplitudes inside ``support``."""
    lo, hi = support
    width = hi - lo
    half = rng.uniform(0.05, 0.5, n_bumps) * width / 2
    centre = lo + half + rng.uniform(0, 1, n_bumps) * (width - 2 * half)
    amp = rng.normal(size=n_bumps)

    def value(s):
        z = (np.asarray(s, dtype=float)[..., None] - centre) / half
        b = np.where(np.abs(z) < 1, np.cos(np.pi * z / 2) ** 2, 0.0)
        return b @ amp

    def deriv(s):
        z = (np.asarray(s, dtype=float)[..., None] - centre) / half
        d = np.where(np.abs(z) < 1, -np.pi / 2 * np.sin(np.pi * z) / half, 0.0)
        return d @ amp

    return Test1D(value, deriv, (lo, hi), np.concatenate([centre - half, centre + half]))


def hardy_gap(A, B, psi: Test1D, cells=64, order=16):
    """int psi'^2 h - (2B - A^2) int psi^2 / h, h(s) = 1 + A s + B s^2 / 2, over supp psi."""
    lo, hi = psi.support
    inner = [b for b in psi.breaks if lo < b < hi]
    edges = np.unique(np.concatenate([np.linspace(lo, hi, cells + 1), inner]))
    s, w = gauss_legendre_edges(edges, order)
    s, w = s.ravel(), w.ravel()
    h = 1 + A * s + B * s * s / 2
    if np.any(h <= 0):
        raise DomainError(f"h(s) = 1 + {A} s + {B} s^2/2 is not positive on the support")
    lhs = integrate(psi.deriv(s) ** 2 * h, w)
    rhs = (2 * B - A * A) * integrate(psi.value(s) ** 2 / h, w)
    return lhs - rhs


def support_avoiding_roots(A, B, rng, max_len=6.0):
    """A random interval where 1 + A s + B s^2/2 > 0."""
    r = np.roots([B / 2, A, 1.0]) if (A or B) else np.array([])
    roots = np.real(r[np.abs(np.imag(r)) < 1e-12])
    for _ in range(1000):
        c = rng.uniform(-max_len, max_len)
        L = rng.uniform(0.2, max_len / 2)
        lo, hi = c - L, c + L
        if not np.any((roots > lo - 1e-3) & (roots < hi + 1e-3)):
            return lo, hi
    raise DomainError("could not place a support away from the roots of h")


# ----------------------------------------------------------------- basis

class CosSquaredBasis1D:
    """cos^2 bumps phi_i on a uniform knot grid; interior centres, partition of unity inside."""

    def __init__(self, lo, hi, n):
        if n < 1:
            raise ValueError("basis size must be positive")
        self.lo, self.hi, self.n = float(lo), float(hi), int(n)
        self.h = (self.hi - self.lo) / (n + 1)
        self.centres = self.lo + self.h * np.arange(1, n + 1)

    @property
    def knots(self):
        return self.lo + self.h * np.arange(self.n + 2)

    def local(self, x):
        """Indices (left, right) of the two bumps alive at x, values and derivatives."""
        x = np.asarray(x, dtype=float)
        k = np.clip(np.floor((x - self.lo) / self.h).astype(int), 0, self.n)
        z = (x - (self.lo + k * self.h)) / self.h   # in [0, 1]
        ang = np.pi * z / 2
        # bump centred at knot k (index k-1) decays, bump at knot k+1 (index k) rises
        vl, vr = np.cos(ang) ** 2, np.sin(ang) ** 2
        dl = -np.pi / 2 * np.sin(np.pi * z) / self.h
        dr = -dl
        return (k - 1, k), (vl, vr), (dl, dr)

    def evaluate(self, coeffs, x):
        coeffs = np.asarray(coeffs, dtype=float)
        (il, ir), (vl, vr), (dl, dr) = self.local(x)
        pad = np.concatenate([[0.0], coeffs, [0.0]])
        return pad[il + 1] * vl + pad[ir + 1] * vr, pad[il + 1] * dl + pad[ir + 1] * dr


class TensorFunction:
    """f(x, t) = sum c_ij phi_i(x) psi_j(t); value/grad/support for the variation routines."""

    def __init__(self, rect: Rect, shape, coeffs):
        self.rect = rect
        self.support = rect
        self.shape = tuple(int(n) for n in shape)
        self.coeffs = np.asarray(coeffs, dtype=float).reshape(self.shape)
        self.bx = CosSquaredBasis1D(rect.x0, rect.x1, self.shape[0])
        self.bt = CosSquaredBasis1D(rect.t0, rect.t1, self.shape[1])

    def _parts(self, x, t):
        x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
        (ixl, ixr), (vxl, vxr), (dxl, dxr) = self.bx.local(x)
        (itl, itr), (vtl, vtr), (dtl, dtr) = self.bt.local(t)
        C = np.pad(self.coeffs, 1)
        out_v = np.zeros(x.shape)
        out_x = np.zeros(x.shape)
        out_t = np.zeros(x.shape)
        for ix, vx, dx in ((ixl, vxl, dxl), (ixr, vxr, dxr)):
            for it, vt, dt in ((itl, vtl, dtl), (itr, vtr, dtr)):
                c = C[ix + 1, it + 1]
                out_v += c * vx * vt
                out_x += c * dx * vt
                out_t += c * vx * dt
        inside = self.rect.contains(x, t)
        return (np.where(inside, out_v, 0.0), np.where(inside, out_x, 0.0),
                np.where(inside, out_t, 0.0))

    def value(self, x, t):
        return self._parts(x, t)[0]

    __call__ = value

    def grad(self, x, t):
        _, fx, ft = self._parts(x, t)
        return fx, ft

    def to_spec(self):
        r = self.rect
        return {"rect": [r.x0, r.x1, r.t0, r.t1], "shape": list(self.shape),
                "coeffs": self.coeffs.tolist()}


# ----------------------------------------------------------- eigen-search

@dataclass
class EigenResult:
    min_eigenvalue: float
    witness: TensorFunction
    shape: tuple
    history: list
    converged: bool
    kappa_oscillation: float


def _assemble(graph, body, rect: Rect, shape, order=8, step=gs.DEFAULT_FD_STEP):
    """Sparse evaluation of all basis functions at knot-aligned Gauss nodes; dense Q, M."""
    nx, nt = shape
    bx = CosSquaredBasis1D(rect.x0, rect.x1, nx)
    bt = CosSquaredBasis1D(rect.t0, rect.t1, nt)
    xs, wx = gauss_legendre_edges(bx.knots, order)
    ts, wt = gauss_legendre_edges(bt.knots, order)
    xs, wx, ts, wt = xs.ravel(), wx.ravel(), ts.ravel(), wt.ravel()
    X, T = np.meshgrid(xs, ts, indexing="ij")
    W = np.outer(wx, wt)
    X, T, W = X.ravel(), T.ravel(), W.ravel()

    u, ux, ut = graph.derivatives(X, T)
    p = ux + 2 * u * ut
    r = np.sqrt(1 + p**2)
    kappa = cb.boundary_curvature(body, gs.horizontal_normal(p))
    weight = W * r / kappa
    q = q_function(graph, X, T, step)

    (ixl, ixr), (vxl, vxr), (dxl, dxr) = bx.local(X)
    (itl, itr), (vtl, vtr), (dtl, dtr) = bt.local(T)
    rows, cols, vals, zvals = [], [], [], []
    node = np.arange(X.size)
    for ix, vx, dx in ((ixl, vxl, dxl), (ixr, vxr, dxr)):
        for it, vt, dt in ((itl, vtl, dtl), (itr, vtr, dtr)):
            ok = (ix >= 0) & (ix < nx) & (it >= 0) & (it < nt)
            rows.append(node[ok])
            cols.append((ix * nt + it)[ok])
            vals.append((vx * vt)[ok])
            # Z(phi) = -(phi_x + 2 u phi_t) / sqrt(1 + p^2)
            zvals.append((-(dx * vt + 2 * u * vx * dt) / r)[ok])
    rows, cols = np.concatenate(rows), np.concatenate(cols)
    nb = nx * nt
    B = sp.csr_matrix((np.concatenate(vals), (rows, cols)), shape=(X.size, nb))
    BZ = sp.csr_matrix((np.concatenate(zvals), (rows, cols)), shape=(X.size, nb))
    Dw = sp.diags(weight)
    Dq = sp.diags(weight * q)
    Q = (BZ.T @ Dw @ BZ + B.T @ Dq @ B).tocsc()
    M = (B.T @ Dw @ B).tocsc()
    # Z(f)^2 >= 0, so Q/M >= min q: a safe shift below the whole spectrum
    return 0.5 * (Q + Q.T), 0.5 * (M + M.T), float(np.min(q))


DENSE_LIMIT = 1600


def min_eigenpair(graph, body, rect: Rect, shape=DEFAULT_BASIS, order=8):
    """Smallest generalized eigenpair, M-normalized; dense for small bases, shift-invert otherwise."""
    Q, M, qmin = _assemble(graph, body, rect, shape, order)
    if Q.shape[0] <= DENSE_LIMIT:
        lam, vec = scipy.linalg.eigh(Q.toarray(), M.toarray(), subset_by_index=[0, 0])
        return float(lam[0]), vec[:, 0]
    v0 = np.ones(Q.shape[0])
    try:
        lam, vec = spla.eigsh(Q, k=1, M=M, sigma=qmin - 1.0, which="LM", v0=v0, tol=1e-12)
    except spla.ArpackError as exc:
        raise NumericalError(f"sparse eigen-solve failed: {exc}") from exc
    v = vec[:, 0]
    return float(lam[0]), v / np.sqrt(v @ (M @ v))


def kappa_oscillation(graph, body, rect: Rect, n_curves=9, base_x=None):
    """Max oscillation of kappa(pi_K(nu_h)) along sampled characteristics (0 if stationary)."""
    base_x = 0.5 * (rect.x0 + rect.x1) if base_x is None else base_x
    eps = np.linspace(rect.t0, rect.t1, n_curves + 2)[1:-1]
    curves = integrate_characteristics(graph, eps, (rect.x0 - base_x, rect.x1 - base_x), base_x=base_x)
    worst = 0.0
    for c in curves:
        k = cb.boundary_curvature(body, gs.horizontal_normal(c.p))
        worst = max(worst, float(np.ptp(k)))
    return worst


def find_destabilizing(graph, body, rect: Rect | None = None, shape=DEFAULT_BASIS,
                       refinements=3, tol=0.05, order=8) -> EigenResult:
    """Minimal Rayleigh quotient Q/M over the cos^2 tensor basis, refined x2 until stable.

    ``rect`` defaults to the graph domain shrunk by 5% on each side so that
    finite differences along characteristics stay inside the domain.
    """
    if rect is None:
        d = graph.domain
        mx, mt = 0.05 * (d.x1 - d.x0), 0.05 * (d.t1 - d.t0)
        rect = Rect(d.x0 + mx, d.x1 - mx, d.t0 + mt, d.t1 - mt)
    history = []
    shape = tuple(int(n) for n in shape)
    lam, vec = min_eigenpair(graph, body, rect, shape, order)
    history.append({"shape": list(shape), "min_eigenvalue": lam})
    converged = False
    for _ in range(refinements):
        new_shape = (2 * shape[0], 2 * shape[1])
        new_lam, new_vec = min_eigenpair(graph, body, rect, new_shape, order)
        history.append({"shape": list(new_shape), "min_eigenvalue": new_lam})
        change = abs(new_lam - lam) / max(abs(new_lam), NEG_TOL)
        shape, lam, vec = new_shape, new_lam, new_vec
        if change < tol:
            converged = True
            break
    witness = TensorFunction(rect, shape, vec)
    return EigenResult(lam, witness, shape, history, converged,
                       kappa_oscillation(graph, body, rect))


def witness_quadrature(rect: Rect, shape, order=8) -> QuadratureSpec:
    """Gauss cells aligned with the knot grid of a witness of the given shape."""
    return QuadratureSpec(order, (shape[0] + 1, shape[1] + 1))


def witness_mass(graph, body, f: TensorFunction, order=8):
    x, t, w = witness_quadrature(f.rect, f.shape, order).nodes(f.rect)
    p = gs.shift_p(graph, x, t)
    kappa = cb.boundary_curvature(body, gs.horizontal_normal(p))
    return integrate(f.value(x, t) ** 2 * np.sqrt(1 + p**2) / kappa, w)


# --------------------------------------------------------------- report

@dataclass
class StabilityReport:
    stationary: bool
    residual: float
    A_B_per_eps: list
    min_eigenvalue: float | None
    witness: dict | None
    verdict: str
    planar: bool = False
    plane_fit_residual: float | None = None
    max_abs_da_db: float | None = None
    converged: bool | None = None
    eigen_history: list = field(default_factory=list)
    kappa_oscillation: float | None = None
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {
            "stationary": self.stationary,
            "residual": self.residual,
            "A_B_per_eps": self.A_B_per_eps,
            "min_eigenvalue": self.min_eigenvalue,
            "witness": self.witness,
            "verdict": self.verdict,
            "planar": self.planar,
            "plane_fit_residual": self.plane_fit_residual,
            "max_abs_da_db": self.max_abs_da_db,
            "converged": self.converged,
            "eigen_history": self.eigen_history,
            "kappa_oscillation": self.kappa_oscillation,
            "notes": self.notes,
        }


def vertical_plane_residual(graph, n=41):
    """Max distance of the embedded surface from its best-fit vertical plane a x + b y = c."""
    d = graph.domain
    x, t = np.meshgrid(np.linspace(d.x0, d.x1, n), np.linspace(d.t0, d.t1, n), indexing="ij")
    y = graph(x, t)
    pts = np.stack([x.ravel(), y.ravel()], axis=-1)
    centred = pts - pts.mean(axis=0)
    _, sv, vt = np.linalg.svd(centred, full_matrices=False)
    return float(np.max(np.abs(centred @ vt[-1])))


def bernstein_report(graph, body, n_eps=41, base_x=None, basis=DEFAULT_BASIS, refinements=3,
                     tol=0.05, ode_step=1e-3, quad_order=8) -> StabilityReport:
    """Stationarity, ruling data, eigen-search and a verdict.

    stable-planar: stationary, a' and b' vanish (so u is affine) and the
    search finds no negative direction.  unstable: a negative eigenvalue
    whose witness also has Q < 0 by direct quadrature.  Otherwise
    inconclusive.
    """
    d = graph.domain
    if base_x is None:
        base_x = 0.0 if d.x0 <= 0.0 <= d.x1 else 0.5 * (d.x0 + d.x1)
    eps = np.linspace(d.t0, d.t1, n_eps + 2)[1:-1]
    curves = integrate_characteristics(graph, eps, step=ode_step, base_x=base_x)
    residual = max(float(np.ptp(c.p)) for c in curves)
    stationary = residual <= STATIONARY_TOL
    notes = []
    if not stationary:
        notes.append("graph is not area-stationary; the stability form does not apply")
        return StabilityReport(False, residual, [], None, None, "inconclusive", notes=notes)

    ruling = ruling_from_graph(graph, eps, base_x)
    da, db = ruling.derivatives()
    ab = [{"eps": float(e), "A": float(-a1), "B": float(2 * b1),
           "two_B_minus_A_sq": float(4 * b1 - a1 * a1)} for e, a1, b1 in zip(eps, da, db)]
    flat = float(np.max(np.abs(da)) + np.max(np.abs(db)))
    plane_res = vertical_plane_residual(graph)
    planar = flat <= PLANAR_TOL and plane_res <= PLANE_FIT_TOL

    eig = find_destabilizing(graph, body, shape=basis, refinements=refinements, tol=tol,
                             order=quad_order)
    lam = eig.min_eigenvalue
    witness = eig.witness.to_spec()
    verdict = "inconclusive"
    if lam < -NEG_TOL:
        direct = stability_form(graph, body, eig.witness,
                                witness_quadrature(eig.witness.rect, eig.shape, quad_order))
        mass = witness_mass(graph, body, eig.witness, quad_order)
        witness["Q_direct"] = direct
        witness["mass"] = mass
        witness["rel_gap"] = abs(direct / mass - lam) / abs(lam)
        if direct < 0:
            verdict = "unstable"
        else:
            notes.append("negative eigenvalue not confirmed by direct quadrature")
    elif planar:
        verdict = "stable-planar"
    else:
        notes.append(f"no instability found at basis resolution {list(eig.shape)}")
    if not eig.converged:
        notes.append("minimal eigenvalue did not settle within the refinement budget")
    return StabilityReport(True, residual, ab, lam, witness, verdict, planar, plane_res, flat,
                           eig.converged, eig.history, eig.kappa_oscillation, notes)
