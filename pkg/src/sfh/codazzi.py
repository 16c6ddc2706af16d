"""The ODE y'' - 6 y' y + 4 y^3 = 0: closed form, RK4, first integral, poles.

The solution with y(0) = a, y'(0) = b is

    y_{a,b}(s) = (a - c s) / (1 - 2 a s + c s^2),   c = 2 a^2 - b,

and satisfies y^2 - y' = (a^2 - b) / (1 - 2 a s + c s^2)^2.  Along the
characteristic lines of an area-stationary intrinsic graph, y = <N,T>/|N_h|
solves the same equation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError, NotStationaryError
from .graph_surface import nt_over_nh, shift_p

POLE_TOL = 1e-12
BLOWUP = 1e9
DEFAULT_STEP = 1e-4


def _denominator(a, b, s):
    c = 2 * a * a - b
    return 1 - 2 * a * s + c * s * s


def y_closed_form(a, b, s, derivative=False):
    """y_{a,b}(s) (and y' if ``derivative``); raises DomainError at a pole."""
    s = np.asarray(s, dtype=float)
    c = 2 * a * a - b
    den = _denominator(a, b, s)
    if np.any(np.abs(den) < POLE_TOL):
        bad = np.atleast_1d(s)[np.abs(np.atleast_1d(den)) < POLE_TOL][0]
        raise DomainError(f"y_{{{a},{b}}} has a pole near s={bad:.6g}")
    num = a - c * s
    y = num / den
    if not derivative:
        return y
    dy = (-c * den - num * (-2 * a + 2 * c * s)) / den**2
    return y, dy


def codazzi_rhs(state):
    """(y, y')' for the first-order system; ``state`` has shape (..., 2)."""
    y, v = state[..., 0], state[..., 1]
    return np.stack([v, 6 * v * y - 4 * y**3], axis=-1)


class GlobalClass(NamedTuple):
    entire: bool
    pole: float | None
    poles: tuple


def classify_global(a, b, tol=1e-14):
    """Entire iff a^2 > b or a = b = 0; otherwise report the real poles.

    When a^2 = b the numerator and denominator share the root 1/a and the
    solution reduces to a / (1 - a s).
    """
    a, b = float(a), float(b)
    if a == 0.0 and b == 0.0:
        return GlobalClass(True, None, ())
    gap = a * a - b
    if abs(gap) <= tol * max(1.0, a * a, abs(b)):
        if a == 0.0:
            return GlobalClass(True, None, ())
        return GlobalClass(False, 1 / a, (1 / a,))
    c = 2 * a * a - b
    if c == 0.0:
        roots = [] if a == 0.0 else [1 / (2 * a)]
    else:
        disc = a * a - c
        if disc < 0:
            roots = []
        else:
            r = np.sqrt(disc)
            roots = sorted({(a - r) / c, (a + r) / c})
    if not roots:
        return GlobalClass(True, None, ())
    roots = tuple(sorted(roots, key=abs))
    return GlobalClass(False, roots[0], roots)


@dataclass
class CodazziSolution:
    a: float
    b: float
    s: np.ndarray
    y: np.ndarray
    dy: np.ndarray
    step: float
    truncated: bool = False
    reason: str = ""


def _rk4_march(a, b, step, n):
    """n classical RK4 steps of size ``step`` from (a, b); stops at blow-up."""
    out = np.empty((n + 1, 2))
    y, v = float(a), float(b)
    out[0] = (y, v)
    h, h2 = float(step), 0.5 * float(step)

    def f(y, v):
        return v, 6 * v * y - 4 * y * y * y

    for i in range(n):
        k1y, k1v = f(y, v)
        k2y, k2v = f(y + h2 * k1y, v + h2 * k1v)
        k3y, k3v = f(y + h2 * k2y, v + h2 * k2v)
        k4y, k4v = f(y + h * k3y, v + h * k3v)
        y = y + h * (k1y + 2 * k2y + 2 * k3y + k4y) / 6
        v = v + h * (k1v + 2 * k2v + 2 * k3v + k4v) / 6
        if not (abs(y) <= BLOWUP and np.isfinite(v)):
            return out[: i + 1], True
        out[i + 1] = (y, v)
    return out, False


def integrate_codazzi(a, b, s_range, step=DEFAULT_STEP):
    """RK4 from s = 0 outwards to both ends of ``s_range``.

    Integration stops one step before a pole of the closed form and when
    |y| exceeds the blow-up threshold.  The returned samples are the part
    of the grid s = k * step that lies in ``s_range``.
    """
    s0, s1 = float(s_range[0]), float(s_range[1])
    if not s1 > s0:
        raise ValueError("s_range must be increasing")
    if step <= 0:
        raise ValueError("step must be positive")
    poles = classify_global(a, b).poles
    truncated, reasons = False, []
    parts = []
    for sign, end in ((-1.0, s0), (1.0, s1)):
        reach = max(0.0, sign * end)
        ahead = [sign * p for p in poles if sign * p > 0]
        if ahead and min(ahead) <= reach + step:
            reach = max(0.0, min(ahead) - step)
            truncated = True
            reasons.append(f"pole at s={sign * min(ahead):.6g}")
        n = int(np.floor(reach / step + 1e-9))
        traj, blew = _rk4_march(a, b, sign * step, n)
        if blew:
            truncated = True
            reasons.append("blow-up")
        s = sign * step * np.arange(traj.shape[0])
        parts.append((s, traj))
    (sm, tm), (sp, tp) = parts
    s = np.concatenate([sm[:0:-1], sp])
    traj = np.concatenate([tm[:0:-1], tp])
    keep = (s >= s0 - 1e-12) & (s <= s1 + 1e-12)
    return CodazziSolution(float(a), float(b), s[keep], traj[keep, 0], traj[keep, 1], step,
                           truncated, "; ".join(reasons))


def first_integral_residual(a, b, s):
    """|y^2 - y' - (a^2 - b)/den^2| with y, y' from the closed form (quotient rule)."""
    y, dy = y_closed_form(a, b, s, derivative=True)
    den = _denominator(a, b, np.asarray(s, dtype=float))
    return np.abs(y**2 - dy - (a * a - b) / den**2)


def ode_residual(s, y):
    """Max |y'' - 6 y' y + 4 y^3| from central differences on a uniform grid."""
    s = np.asarray(s, dtype=float)
    y = np.asarray(y, dtype=float)
    h = s[1] - s[0]
    d1 = (y[2:] - y[:-2]) / (2 * h)
    d2 = (y[2:] - 2 * y[1:-1] + y[:-2]) / h**2
    yc = y[1:-1]
    return float(np.max(np.abs(d2 - 6 * d1 * yc + 4 * yc**3)))


def dilation_residual(a, b, lam, s_range, step=DEFAULT_STEP):
    """Compare lam^-1 y_{a,b}(s/lam) with the RK4 solution of its own initial data.

    The dilated function has initial values (a/lam, b/lam^2).  Returns the
    max gap and the finite-difference ODE residual of the dilated closed form.
    """
    sol = integrate_codazzi(a / lam, b / lam**2, s_range, step)
    dilated = y_closed_form(a, b, sol.s / lam) / lam
    gap = float(np.max(np.abs(dilated - sol.y)))
    return gap, ode_residual(sol.s, dilated)


# ------------------------------------------------------------ on a surface

@dataclass
class SurfaceCodazzi:
    eps: float
    a: float
    b: float
    da: float
    db: float
    residual: float            # ODE residual, unit-speed in x (reversed orientation)
    residual_arc: float        # ODE residual, arc-length along Z
    gap_y0: float
    gap_dy0: float
    gap_y0_arc: float
    gap_dy0_arc: float
    closed_form_gap: float     # vs y_{a'/2, a'^2/2 - b'}
    s: np.ndarray
    y: np.ndarray

    def to_dict(self):
        return {k: float(v) for k, v in self.__dict__.items() if k not in ("s", "y")}


def _line_extent(graph, base_x, eps, a, b, step, pad):
    """Symmetric s-interval, on the step grid, whose line points stay in the domain."""
    r = graph.domain
    limit = max(r.x1 - r.x0, r.t1 - r.t0) * 2
    n = int(limit / step)
    s = step * np.arange(-n, n + 1)
    x = base_x + s
    t = eps + a * s + b * s * s
    ok = r.contains(x, t, tol=1e-12)
    i0 = n
    if not ok[i0]:
        raise DomainError(f"base point ({base_x}, {eps}) is outside the domain")
    lo = i0
    while lo > 0 and ok[lo - 1]:
        lo -= 1
    hi = i0
    while hi < s.size - 1 and ok[hi + 1]:
        hi += 1
    m = min(i0 - lo, hi - i0) - pad
    if m < 4:
        raise DomainError(f"characteristic through eps={eps} is too short inside the domain")
    return step * np.arange(-m, m + 1)


def codazzi_residual_on_surface(graph, eps, base_x=0.0, step=DEFAULT_STEP, deps=1e-3,
                                stationary_tol=1e-6) -> SurfaceCodazzi:
    """Sample y = <N,T>/|N_h| along the line through (base_x, eps).

    The line is t = eps + a s + b s^2 at x = base_x + s, with a = 2u and b = p
    at the base point.  Walking it backwards, r = -s, gives a solution of the
    ODE with y(0) = a'/2 and y'(0) = a'^2/2 - b'.  The arc-length
    parametrization along Z is the dilation by sqrt(1 + b^2) of that one.
    """
    bx = np.array([base_x])

    def ab(e):
        e = np.array([e])
        return 2 * graph(bx, e)[0], shift_p(graph, bx, e)[0]

    a, b = ab(eps)
    ap, bp = ab(eps + deps)
    am, bm = ab(eps - deps)
    ap2, bp2 = ab(eps + 2 * deps)
    am2, bm2 = ab(eps - 2 * deps)
    da = (8 * (ap - am) - (ap2 - am2)) / (12 * deps)
    db = (8 * (bp - bm) - (bp2 - bm2)) / (12 * deps)

    s = _line_extent(graph, base_x, eps, a, b, step, pad=2)
    x = base_x + s
    t = eps + a * s + b * s * s
    pv = shift_p(graph, x, t)
    osc = float(np.max(pv) - np.min(pv))
    if osc > stationary_tol:
        raise NotStationaryError(f"p varies by {osc:.3g} along the line through eps={eps}")
    lam = np.sqrt(1 + b * b)
    # r = -s; y_r(r) = <N,T>/|N_h| * lam, the unit-x-speed normalization of u_t
    yr = (nt_over_nh(graph, x, t) * lam)[::-1]
    r = -s[::-1]
    mid = r.size // 2
    h = r[1] - r[0]
    y0 = yr[mid]
    dy0 = (yr[mid + 1] - yr[mid - 1]) / (2 * h)
    res = ode_residual(r, yr)
    # arc length sigma = lam * r, Y(sigma) = y_r(sigma / lam) / lam
    sig = lam * r
    Y = yr / lam
    res_arc = ode_residual(sig, Y)
    Y0 = Y[mid]
    dY0 = (Y[mid + 1] - Y[mid - 1]) / (2 * (sig[1] - sig[0]))
    A0, B0 = da / 2, da * da / 2 - db
    closed = y_closed_form(A0, B0, r)
    return SurfaceCodazzi(
        eps=float(eps), a=float(a), b=float(b), da=float(da), db=float(db),
        residual=res, residual_arc=res_arc,
        gap_y0=abs(y0 - A0), gap_dy0=abs(dy0 - B0),
        gap_y0_arc=abs(Y0 - A0 / lam), gap_dy0_arc=abs(dY0 - B0 / lam**2),
        closed_form_gap=float(np.max(np.abs(yr - closed))), s=sig, y=Y,
    )
