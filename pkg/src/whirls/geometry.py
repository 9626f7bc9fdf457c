"""Annuli, 2-plane radial variables and plane frames.

Points are arrays of shape (..., n).  For x in R^n the radial variables
are y_l = |(x_{2l-1}, x_{2l})| for l <= d, and for odd n the extra
coordinate y_N = x_n (which may be negative).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


@dataclass(frozen=True)
class Annulus:
    n: int
    a: float
    b: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"dimension must be an integer >= 2, got {self.n}")
        if not (0 < self.a < self.b):
            raise ValueError(f"radii must satisfy 0 < a < b, got a={self.a}, b={self.b}")

    @property
    def d(self) -> int:
        return self.n // 2

    @property
    def N(self) -> int:
        return (self.n + 1) // 2

    @property
    def even(self) -> bool:
        return self.n % 2 == 0

    @property
    def width(self) -> float:
        return self.b - self.a

    @property
    def delta_axis(self) -> float:
        return 1e-3 * self.a

    def volume(self) -> float:
        from math import gamma, pi
        unit = pi ** (self.n / 2) / gamma(self.n / 2 + 1)
        return unit * (self.b ** self.n - self.a ** self.n)


@dataclass(frozen=True)
class PlaneFrame:
    """Plane components w^i, their quarter turns [w^i]^perp, y and z.

    Shapes: w, wperp (..., N, n); y (..., N); z (...).
    """

    w: np.ndarray
    wperp: np.ndarray
    y: np.ndarray
    z: np.ndarray

    def grad_y(self) -> np.ndarray:
        """Unit gradients of the y_l, shape (..., N, n); w^l / y_l."""
        return self.w / self.y[..., None]


def _check_dim(x, ann: Annulus) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != ann.n:
        raise ValueError(f"expected points with {ann.n} components, got shape {x.shape}")
    return x


def radial_coords(x, ann: Annulus) -> tuple[np.ndarray, np.ndarray]:
    x = _check_dim(x, ann)
    d = ann.d
    pairs = x[..., : 2 * d].reshape(x.shape[:-1] + (d, 2))
    y = np.hypot(pairs[..., 0], pairs[..., 1])
    if not ann.even:
        y = np.concatenate([y, x[..., -1:]], axis=-1)
    z = np.linalg.norm(x, axis=-1)
    return y, z


def plane_frame(x, ann: Annulus) -> PlaneFrame:
    x = _check_dim(x, ann)
    n, d, N = ann.n, ann.d, ann.N
    shape = x.shape[:-1]
    w = np.zeros(shape + (N, n))
    wp = np.zeros(shape + (N, n))
    for i in range(d):
        w[..., i, 2 * i] = x[..., 2 * i]
        w[..., i, 2 * i + 1] = x[..., 2 * i + 1]
        wp[..., i, 2 * i] = -x[..., 2 * i + 1]
        wp[..., i, 2 * i + 1] = x[..., 2 * i]
    if not ann.even:
        w[..., N - 1, n - 1] = x[..., n - 1]
    y, z = radial_coords(x, ann)
    return PlaneFrame(w, wp, y, z)


def grad_y(x, ann: Annulus) -> np.ndarray:
    """Gradients of y_l with respect to x, shape (..., N, n).

    The odd trailing variable has gradient e_n regardless of sign.
    """
    fr = plane_frame(x, ann)
    g = np.zeros_like(fr.w)
    g[..., : ann.d, :] = fr.w[..., : ann.d, :] / fr.y[..., : ann.d, None]
    if not ann.even:
        g[..., -1, -1] = 1.0
    return g


def hess_y(x, ann: Annulus) -> np.ndarray:
    """Hessians of y_l, shape (..., N, n, n); zero for the odd trailing y_N."""
    x = _check_dim(x, ann)
    y, _ = radial_coords(x, ann)
    g = grad_y(x, ann)
    h = np.zeros(x.shape[:-1] + (ann.N, ann.n, ann.n))
    for l in range(ann.d):
        proj = np.zeros((ann.n, ann.n))
        proj[2 * l, 2 * l] = proj[2 * l + 1, 2 * l + 1] = 1.0
        gl = g[..., l, :]
        h[..., l, :, :] = (proj - gl[..., :, None] * gl[..., None, :]) / y[..., l, None, None]
    return h


def lap_y(x, ann: Annulus) -> np.ndarray:
    y, _ = radial_coords(x, ann)
    out = np.zeros_like(y)
    out[..., : ann.d] = 1.0 / y[..., : ann.d]
    return out


class BoundaryPart(str, Enum):
    INTERIOR = "interior"
    DIRICHLET_INNER = "dirichlet_inner"
    DIRICHLET_OUTER = "dirichlet_outer"
    NEUMANN = "neumann"
    OUTSIDE = "outside"


def boundary_part(y, ann: Annulus, tol: float = 1e-12) -> BoundaryPart:
    """Locate a point y of R^N relative to the closed reduced annulus.

    Dirichlet spheres take precedence over the Neumann (axis) part.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    y = np.asarray(y, dtype=float)
    if y.shape != (ann.N,):
        raise ValueError(f"expected {ann.N} radial variables, got shape {y.shape}")
    z = float(np.linalg.norm(y))
    planar = y[: ann.d]
    if np.any(planar < -tol) or z < ann.a - tol or z > ann.b + tol:
        return BoundaryPart.OUTSIDE
    if abs(z - ann.a) <= tol:
        return BoundaryPart.DIRICHLET_INNER
    if abs(z - ann.b) <= tol:
        return BoundaryPart.DIRICHLET_OUTER
    if np.any(np.abs(planar) <= tol):
        return BoundaryPart.NEUMANN
    return BoundaryPart.INTERIOR


# ---------------------------------------------------------------------------
# sampling

GRID_LEVELS = {"COARSE": (8, 16), "DEFAULT": (24, 48), "FINE": (48, 96)}


def random_directions(ann: Annulus, count: int, rng: np.random.Generator,
                      axis_margin: float | None = None) -> np.ndarray:
    """Unit vectors whose planar radii all exceed ``axis_margin`` (relative)."""
    margin = axis_margin if axis_margin is not None else ann.delta_axis / ann.a
    out = []
    have = 0
    while have < count:
        g = rng.standard_normal((2 * (count - have) + 8, ann.n))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        y, _ = radial_coords(g, ann)
        ok = np.all(y[:, : ann.d] >= margin, axis=1)
        g = g[ok][: count - have]
        out.append(g)
        have += len(g)
    return np.concatenate(out, axis=0)


def sample_grid(ann: Annulus, level: str = "DEFAULT", seed: int = 0,
                axis_margin: float | None = None) -> np.ndarray:
    """Deterministic interior grid: shell midpoints times direction samples.

    Shells sit at the midpoints of an even split of (a, b); every shell
    shares the same set of directions so grids are nested across shells.
    Points closer to an axis than delta_axis are never produced.
    """
    try:
        shells, dirs = GRID_LEVELS[level.upper()]
    except KeyError:
        raise ValueError(f"unknown grid level {level!r}; choose from {sorted(GRID_LEVELS)}") from None
    rng = np.random.default_rng(seed)
    omega = random_directions(ann, dirs, rng, axis_margin)
    radii = ann.a + (np.arange(shells) + 0.5) * ann.width / shells
    return (radii[:, None, None] * omega[None, :, :]).reshape(-1, ann.n)


def random_points(ann: Annulus, count: int, rng: np.random.Generator,
                  inset: float = 0.02, axis_margin: float | None = None) -> np.ndarray:
    """Random interior points, radii uniform on a slightly inset interval."""
    lo = ann.a + inset * ann.width
    hi = ann.b - inset * ann.width
    r = rng.uniform(lo, hi, size=count)
    return r[:, None] * random_directions(ann, count, rng, axis_margin)


def sphere_points(ann: Annulus, radius: float, count: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return radius * random_directions(ann, count, rng)
