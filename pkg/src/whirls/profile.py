"""Radial angle profiles G(r) on [a, b] with exact slope access.

A profile is defined by its slope function r -> G'(r) (closed form or the
root of the flux relation) and a curvature function.  Values are stored
on a Chebyshev grid by panel-wise Gauss-Legendre accumulation; off-grid
values continue from the nearest node with one more Gauss-Legendre
panel, so G inherits the accuracy of the slope rather than that of an
interpolant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .numerics import chebyshev_nodes, quad_gl

GL_ORDER = 16


class ProfileRangeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class RadialProfile:
    a: float
    b: float
    n: int
    m: float
    flux: float
    kind: str
    slope_fn: Callable[[np.ndarray], np.ndarray]
    curvature_fn: Callable[[np.ndarray], np.ndarray]
    nodes: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    meta: dict = field(default_factory=dict, repr=False)

    @classmethod
    def build(cls, a, b, n, m, flux, kind, slope_fn, curvature_fn, count: int = 129,
              scale_to: float | None = None, meta: dict | None = None) -> "RadialProfile":
        """Accumulate G on Chebyshev nodes from the slope.

        ``scale_to`` rescales G so that G(b) hits the target exactly (used
        by closed forms whose normalisation is part of the definition).
        """
        nodes = chebyshev_nodes(a, b, count)
        panels = quad_gl(slope_fn, nodes[:-1], nodes[1:], GL_ORDER)
        values = np.concatenate([[0.0], np.cumsum(panels)])
        meta = dict(meta or {})
        if scale_to is not None and values[-1] != 0:
            factor = scale_to / values[-1]
            meta["normalisation_factor"] = float(factor)
            values = values * factor
            s0, c0 = slope_fn, curvature_fn
            slope_fn = lambda r, _s=s0, _f=factor: _f * _s(r)  # noqa: E731
            curvature_fn = lambda r, _c=c0, _f=factor: _f * _c(r)  # noqa: E731
        values.flags.writeable = False
        nodes.flags.writeable = False
        return cls(a, b, n, m, flux, kind, slope_fn, curvature_fn, nodes, values, meta)

    def _check(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        tol = 1e-9 * self.b
        if np.any(r < self.a - tol) or np.any(r > self.b + tol):
            bad = r[(r < self.a - tol) | (r > self.b + tol)]
            raise ProfileRangeError(f"profile evaluated outside [{self.a}, {self.b}] at r={bad.flat[0]:.6g}")
        return np.clip(r, self.a, self.b)

    def G(self, r) -> np.ndarray:
        r = self._check(r)
        idx = np.clip(np.searchsorted(self.nodes, r), 1, len(self.nodes) - 1)
        left = self.nodes[idx - 1]
        right = self.nodes[idx]
        near = np.where(r - left <= right - r, idx - 1, idx)
        base = self.nodes[near]
        return self.values[near] + quad_gl(self.slope_fn, base, r, GL_ORDER)

    def Gd(self, r) -> np.ndarray:
        return self.slope_fn(self._check(r))

    def Gdd(self, r) -> np.ndarray:
        return self.curvature_fn(self._check(r))

    def flux_deviation(self, A, r=None) -> float:
        """max |r^{n+1} A(r, r^2, n + r^2 G'^2) G' / c - 1| over the nodes."""
        r = self.nodes if r is None else np.asarray(r, dtype=float)
        g = self.Gd(r)
        q = r ** (self.n + 1) * A.value(r, r * r, self.n + (r * g) ** 2) * g
        if self.flux == 0:
            return float(np.max(np.abs(q)))
        return float(np.max(np.abs(q / self.flux - 1.0)))

    def to_rows(self) -> list[tuple[float, float, float, float]]:
        r = self.nodes
        g = self.Gd(r)
        return [(float(a), float(b), float(c), float(self.flux)) for a, b, c in zip(r, self.values, g)]


def linear_profile(a: float, b: float, n: int, m: float, count: int = 129) -> RadialProfile:
    """G(r) = 2 m pi (r - a)/(b - a): matches the boundary data, solves nothing."""
    k = 2 * np.pi * m / (b - a)
    slope = lambda r: np.full(np.shape(r), k)  # noqa: E731
    curv = lambda r: np.zeros(np.shape(r))  # noqa: E731
    return RadialProfile.build(a, b, n, m, float("nan"), "linear", slope, curv, count)


def zero_profile(a: float, b: float, n: int, count: int = 129) -> RadialProfile:
    z = lambda r: np.zeros(np.shape(r))  # noqa: E731
    return RadialProfile.build(a, b, n, 0.0, 0.0, "zero", z, z, count)
