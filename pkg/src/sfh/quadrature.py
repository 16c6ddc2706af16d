"""Composite Gauss-Legendre rules on intervals and rectangles."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import NumericalError

DEFAULT_ORDER = 16
DEFAULT_CELLS = 8


@lru_cache(maxsize=64)
def _leggauss(order):
    return np.polynomial.legendre.leggauss(order)


def gauss_legendre_1d(a, b, cells=DEFAULT_CELLS, order=DEFAULT_ORDER):
    """Nodes and weights of a composite rule on [a, b]."""
    if order < 1 or cells < 1:
        raise ValueError("quadrature order and cell count must be positive")
    xi, wi = _leggauss(order)
    edges = np.linspace(a, b, cells + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * xi[None, :]).ravel()
    weights = (half[:, None] * wi[None, :]).ravel()
    return nodes, weights


def gauss_legendre_edges(edges, order=DEFAULT_ORDER):
    """Rule with one Gauss cell per interval of ``edges`` (for aligned bases)."""
    edges = np.asarray(edges, dtype=float)
    xi, wi = _leggauss(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    return mid[:, None] + half[:, None] * xi[None, :], half[:, None] * wi[None, :]


@dataclass(frozen=True)
class Rect:
    x0: float
    x1: float
    t0: float
    t1: float

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.t1 > self.t0):
            raise ValueError(f"degenerate rectangle {self}")

    def contains(self, x, t, tol=0.0):
        x, t = np.asarray(x), np.asarray(t)
        return ((x >= self.x0 - tol) & (x <= self.x1 + tol)
                & (t >= self.t0 - tol) & (t <= self.t1 + tol))

    @property
    def area(self):
        return (self.x1 - self.x0) * (self.t1 - self.t0)


@dataclass(frozen=True)
class QuadratureSpec:
    order: int = DEFAULT_ORDER
    cells: tuple[int, int] = (DEFAULT_CELLS, DEFAULT_CELLS)

    def nodes(self, rect: Rect):
        return gauss_legendre_rect(rect, self.cells, self.order)


def gauss_legendre_rect(rect: Rect, cells=(DEFAULT_CELLS, DEFAULT_CELLS), order=DEFAULT_ORDER):
    """Tensor-product nodes (x, t) and weights, all flattened."""
    if np.isscalar(cells):
        cells = (int(cells), int(cells))
    xs, wx = gauss_legendre_1d(rect.x0, rect.x1, cells[0], order)
    ts, wt = gauss_legendre_1d(rect.t0, rect.t1, cells[1], order)
    X, Tg = np.meshgrid(xs, ts, indexing="ij")
    W = np.outer(wx, wt)
    return X.ravel(), Tg.ravel(), W.ravel()


def integrate(values, weights):
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise NumericalError("non-finite integrand value in quadrature")
    # fixed summation order keeps results bitwise reproducible
    return float(np.dot(values, weights))
