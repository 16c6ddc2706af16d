"""Compactly supported test functions with analytic gradients."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quadrature import Rect


@dataclass(frozen=True)
class Bump2D:
    """(1 + tilt_x xi + tilt_t eta) (1 - xi^2)^k (1 - eta^2)^k on a rectangle.

    xi and eta are the coordinates rescaled to [-1, 1] on ``support``; the
    function is C^(k-1) on the plane and vanishes outside the rectangle.
    """

    support: Rect
    power: int = 4
    tilt: tuple[float, float] = (0.0, 0.0)
    amplitude: float = 1.0

    def _local(self, x, t):
        r = self.support
        hx, ht = (r.x1 - r.x0) / 2, (r.t1 - r.t0) / 2
        xi = (np.asarray(x, dtype=float) - (r.x0 + hx)) / hx
        eta = (np.asarray(t, dtype=float) - (r.t0 + ht)) / ht
        return xi, eta, hx, ht

    def value(self, x, t):
        xi, eta, _, _ = self._local(x, t)
        k = self.power
        inside = (np.abs(xi) < 1) & (np.abs(eta) < 1)
        bx = np.where(inside, 1 - xi**2, 0.0) ** k
        bt = np.where(inside, 1 - eta**2, 0.0) ** k
        lin = 1 + self.tilt[0] * xi + self.tilt[1] * eta
        return self.amplitude * lin * bx * bt

    __call__ = value

    def grad(self, x, t):
        xi, eta, hx, ht = self._local(x, t)
        k = self.power
        inside = (np.abs(xi) < 1) & (np.abs(eta) < 1)
        px = np.where(inside, 1 - xi**2, 0.0)
        pt = np.where(inside, 1 - eta**2, 0.0)
        bx, bt = px**k, pt**k
        dbx = -2 * k * xi * px ** (k - 1)
        dbt = -2 * k * eta * pt ** (k - 1)
        lin = 1 + self.tilt[0] * xi + self.tilt[1] * eta
        fx = (self.tilt[0] * bx + lin * dbx) * bt / hx
        ft = (self.tilt[1] * bt + lin * dbt) * bx / ht
        return self.amplitude * fx, self.amplitude * ft

    def scaled(self, factor):
        return Bump2D(self.support, self.power, self.tilt, self.amplitude * factor)

    def to_spec(self):
        r = self.support
        return {"support": [r.x0, r.x1, r.t0, r.t1], "power": self.power,
                "tilt": list(self.tilt), "amplitude": self.amplitude}

    @classmethod
    def from_spec(cls, spec):
        x0, x1, t0, t1 = spec["support"]
        return cls(Rect(x0, x1, t0, t1), int(spec.get("power", 4)),
                   tuple(spec.get("tilt", (0.0, 0.0))), float(spec.get("amplitude", 1.0)))


class FDScalar:
    """Wrap a scalar function of (x, t); gradient by 4th-order central differences."""

    def __init__(self, func, support: Rect, step=1e-4):
        self.func = func
        self.support = support
        self.step = step

    def value(self, x, t):
        return self.func(np.asarray(x, dtype=float), np.asarray(t, dtype=float))

    __call__ = value

    def grad(self, x, t):
        h = self.step
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        f = self.func
        fx = (8 * (f(x + h, t) - f(x - h, t)) - (f(x + 2 * h, t) - f(x - 2 * h, t))) / (12 * h)
        ft = (8 * (f(x, t + h) - f(x, t - h)) - (f(x, t + 2 * h) - f(x, t - 2 * h))) / (12 * h)
        return fx, ft

