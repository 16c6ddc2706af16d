"""Planar convex bodies described by their support function.

A body K with 0 in its interior is stored through h(theta), the support
function in direction (cos theta, sin theta).  Everything the sub-Finsler
structure needs is a short functional of h:

* dual norm      ||v||_* = |v| h(arg v)
* inverse Gauss  pi_K(v) = h u + h' u_perp,   u = (cos, sin)(arg v)
* curvature      kappa   = 1 / (h + h'')
* gauge norm     ||v||   = sup_theta <v, u_theta> / h(theta)

Bodies may be asymmetric; nothing here symmetrizes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import InvalidBodyError

TWO_PI = 2.0 * np.pi
C2_MARGIN_TOL = 1e-8
DEFAULT_SAMPLES = 2048


def _as_vec(v):
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != 2:
        raise ValueError(f"plane vectors need a trailing axis of length 2, got shape {v.shape}")
    return v


def angle_of(v):
    v = _as_vec(v)
    return np.mod(np.arctan2(v[..., 1], v[..., 0]), TWO_PI)


class SupportFunction2D:
    """Support function h(theta) with its first two derivatives."""

    kind = "abstract"

    def derivatives(self, theta):
        """Return ``(h, h', h'')`` evaluated at ``theta`` (any shape)."""
        raise NotImplementedError

    def __call__(self, theta):
        return self.derivatives(theta)[0]

    def to_spec(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class DiskSupport(SupportFunction2D):
    r: float = 1.0
    kind = "disk"

    def derivatives(self, theta):
        theta = np.asarray(theta, dtype=float)
        h = np.full_like(theta, self.r)
        return h, np.zeros_like(theta), np.zeros_like(theta)

    def to_spec(self):
        return {"type": "disk", "r": float(self.r)}


@dataclass(frozen=True)
class EllipseSupport(SupportFunction2D):
    """Axis-aligned ellipse x^2/a^2 + y^2/b^2 <= 1."""

    a: float = 2.0
    b: float = 1.0
    kind = "ellipse"

    def derivatives(self, theta):
        theta = np.asarray(theta, dtype=float)
        a2, b2 = self.a**2, self.b**2
        g = a2 * np.cos(theta) ** 2 + b2 * np.sin(theta) ** 2
        g1 = (b2 - a2) * np.sin(2 * theta)
        g2 = 2 * (b2 - a2) * np.cos(2 * theta)
        h = np.sqrt(g)
        h1 = g1 / (2 * h)
        h2 = g2 / (2 * h) - g1**2 / (4 * h**3)
        return h, h1, h2

    def to_spec(self):
        return {"type": "ellipse", "a": float(self.a), "b": float(self.b)}


class SampledSupport(SupportFunction2D):
    """Support values on a uniform theta grid, trigonometric interpolation.

    The interpolant is differentiated term by term, so h' and h'' are exact
    for the interpolant.  Fourier modes below ``1e-15 * max|c|`` (round-off level) are dropped
    from evaluation.
    """

    kind = "support_samples"

    def __init__(self, values):
        values = np.asarray(values, dtype=float)
        if values.ndim != 1 or values.size < 8:
            raise InvalidBodyError("support_samples needs a 1-D array with at least 8 samples")
        self.values = values
        n = values.size
        coef = np.fft.rfft(values) / n
        # one-sided series: c0 + sum_k 2 Re(c_k e^{ik theta}); Nyquist counted once
        weights = np.full(coef.size, 2.0)
        weights[0] = 1.0
        if n % 2 == 0:
            weights[-1] = 1.0
        coef = coef * weights
        mags = np.abs(coef)
        keep = np.nonzero(mags > 1e-15 * mags.max())[0]
        kmax = int(keep[-1]) + 1 if keep.size else 1
        self._coef = coef[:kmax]
        self._k = np.arange(kmax, dtype=float)

    @classmethod
    def from_function(cls, func, count=DEFAULT_SAMPLES):
        theta = TWO_PI * np.arange(count) / count
        return cls(func(theta))

    def derivatives(self, theta, chunk=4096):
        theta = np.asarray(theta, dtype=float)
        flat = theta.ravel()
        out = np.empty((3, flat.size))
        k, c = self._k, self._coef
        for start in range(0, flat.size, chunk):
            th = flat[start:start + chunk]
            e = np.exp(1j * np.outer(th, k)) * c
            out[0, start:start + chunk] = e.real.sum(axis=1)
            out[1, start:start + chunk] = (e * (1j * k)).real.sum(axis=1)
            out[2, start:start + chunk] = (e * (-(k**2))).real.sum(axis=1)
        return tuple(o.reshape(theta.shape) for o in out)

    def to_spec(self):
        return {
            "type": "support_samples",
            "theta_count": int(self.values.size),
            "h": [float(x) for x in self.values],
        }


@dataclass(frozen=True)
class ConvexBody2D:
    support: SupportFunction2D
    name: str = ""
    check_grid: int = field(default=4096, repr=False)

    def __post_init__(self):
        theta = TWO_PI * np.arange(self.check_grid) / self.check_grid
        h = self.support(theta)
        if not np.all(np.isfinite(h)) or h.min() <= 0:
            raise InvalidBodyError(
                f"body {self.name or self.support.kind!r}: support function must be positive "
                f"(min h = {np.min(h):.3g}), i.e. 0 must lie in the interior"
            )

    @cached_property
    def c2_plus(self) -> tuple[bool, float]:
        return validate_C2_plus(self)

    def require_c2_plus(self):
        ok, margin = self.c2_plus
        if not ok:
            raise InvalidBodyError(
                f"body {self.name or self.support.kind!r} is not C^2_+ (min h+h'' = {margin:.3g})"
            )

    def to_spec(self) -> dict:
        return self.support.to_spec()


def disk(r=1.0) -> ConvexBody2D:
    return ConvexBody2D(DiskSupport(float(r)), name=f"disk(r={r:g})")


def ellipse(a=2.0, b=1.0) -> ConvexBody2D:
    return ConvexBody2D(EllipseSupport(float(a), float(b)), name=f"ellipse(a={a:g},b={b:g})")


def sampled(values, name="sampled") -> ConvexBody2D:
    return ConvexBody2D(SampledSupport(values), name=name)


def shifted_ellipse(a=1.5, b=1.0, center=(0.4, -0.25), count=DEFAULT_SAMPLES) -> ConvexBody2D:
    """Sampled support of an off-centre ellipse; an asymmetric test body."""
    base = EllipseSupport(a, b)
    cx, cy = center

    def h(theta):
        return base(theta) + cx * np.cos(theta) + cy * np.sin(theta)

    return ConvexBody2D(SampledSupport.from_function(h, count), name="shifted_ellipse")


def rounded_square(count=DEFAULT_SAMPLES) -> ConvexBody2D:
    """Support of the square [-1,1]^2, which has flat sides (not C^2_+)."""
    def h(theta):
        return np.abs(np.cos(theta)) + np.abs(np.sin(theta))

    return ConvexBody2D(SampledSupport.from_function(h, count), name="square")


def body_from_spec(spec: dict) -> ConvexBody2D:
    kind = spec.get("type")
    if kind == "disk":
        return disk(spec.get("r", 1.0))
    if kind == "ellipse":
        return ellipse(spec["a"], spec["b"])
    if kind == "support_samples":
        h = spec["h"]
        count = spec.get("theta_count", len(h))
        if count != len(h):
            raise InvalidBodyError(f"support_samples: theta_count={count} but {len(h)} values given")
        return sampled(h, name=spec.get("name", "sampled"))
    raise InvalidBodyError(f"unknown body type {kind!r}")


# ---------------------------------------------------------------- operations

def dual_norm(body: ConvexBody2D, v):
    """sup_{k in K} <v, k> = |v| h(arg v); vectorized over leading axes."""
    v = _as_vec(v)
    r = np.hypot(v[..., 0], v[..., 1])
    h = body.support(angle_of(v))
    return np.where(r > 0, r * h, 0.0)


def pi_K(body: ConvexBody2D, v):
    """Boundary point of K whose outer unit normal is v/|v|."""
    v = _as_vec(v)
    if np.any(np.hypot(v[..., 0], v[..., 1]) == 0):
        raise ValueError("pi_K is undefined at v = 0")
    body.require_c2_plus()
    theta = angle_of(v)
    h, h1, _ = body.support.derivatives(theta)
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([h * c - h1 * s, h * s + h1 * c], axis=-1)


def pi_K_derivative(body: ConvexBody2D, v):
    """Jacobian d(pi_K)/dv, shape (..., 2, 2); pi_K = grad of the dual norm."""
    v = _as_vec(v)
    body.require_c2_plus()
    theta = angle_of(v)
    h, _, h2 = body.support.derivatives(theta)
    r2 = v[..., 0] ** 2 + v[..., 1] ** 2
    tang = np.stack([-np.sin(theta), np.cos(theta)], axis=-1)
    dtheta = np.stack([-v[..., 1], v[..., 0]], axis=-1) / r2[..., None]
    return ((h + h2)[..., None, None]) * tang[..., :, None] * dtheta[..., None, :]


def boundary_curvature(body: ConvexBody2D, v):
    """Curvature of the boundary at pi_K(v): 1/(h + h'') at arg v."""
    v = _as_vec(v)
    if np.any(np.hypot(v[..., 0], v[..., 1]) == 0):
        raise ValueError("boundary curvature is indexed by a nonzero direction")
    h, _, h2 = body.support.derivatives(angle_of(v))
    radius = h + h2
    if np.any(radius <= 0):
        raise InvalidBodyError(f"h + h'' <= 0 (min {np.min(radius):.3g}); body is not C^2_+")
    return 1.0 / radius


def validate_C2_plus(body: ConvexBody2D, n_grid=8192) -> tuple[bool, float]:
    """Return (is C^2_+, min over a theta grid of h + h'')."""
    theta = TWO_PI * np.arange(n_grid) / n_grid
    h, _, h2 = body.support.derivatives(theta)
    margin = float(np.min(h + h2))
    return margin > C2_MARGIN_TOL, margin


def _gauge_one(body, v, coarse):
    r = np.hypot(*v)
    if r == 0:
        return 0.0
    theta = TWO_PI * np.arange(coarse) / coarse
    vals = (v[0] * np.cos(theta) + v[1] * np.sin(theta)) / body.support(theta)
    i = int(np.argmax(vals))
    d = TWO_PI / coarse

    def neg(th):
        return -float((v[0] * np.cos(th) + v[1] * np.sin(th)) / body.support(np.asarray(th)))

    res = minimize_scalar(neg, bounds=(theta[i] - d, theta[i] + d), method="bounded",
                          options={"xatol": 1e-13})
    return max(vals[i], -res.fun)


def gauge_norm(body: ConvexBody2D, v, coarse=1440):
    """Minkowski functional inf{lam > 0 : v in lam K}."""
    v = _as_vec(v)
    sup = body.support
    if isinstance(sup, DiskSupport):
        return np.hypot(v[..., 0], v[..., 1]) / sup.r
    if isinstance(sup, EllipseSupport):
        return np.hypot(v[..., 0] / sup.a, v[..., 1] / sup.b)
    flat = v.reshape(-1, 2)
    out = np.array([_gauge_one(body, w, coarse) for w in flat])
    return out.reshape(v.shape[:-1]) if v.ndim > 1 else float(out[0])


def boundary_polygon(body: ConvexBody2D, n=20000):
    """Dense boundary points x(theta) = h u + h' u_perp (used by oracles and plots)."""
    theta = TWO_PI * np.arange(n) / n
    h, h1, _ = body.support.derivatives(theta)
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([h * c - h1 * s, h * s + h1 * c], axis=-1)
