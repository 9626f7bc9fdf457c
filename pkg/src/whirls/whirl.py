"""Whirl maps u(x) = Q[f](y) x on the canonical maximal torus.

Q is block diagonal with 2x2 rotations R[f_i(y)] (and a trailing 1 in odd
dimension).  Rotations follow R[a] = exp(a J) with J = [[0, -1], [1, 0]],
so R[pi/2] = J.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import _kernels
from .geometry import Annulus, radial_coords
from .profile import ProfileRangeError, RadialProfile, linear_profile

J = np.array([[0.0, -1.0], [1.0, 0.0]])


class AxisError(ValueError):
    pass


def rotation(alpha) -> np.ndarray:
    """R[alpha] = [[cos, -sin], [sin, cos]], shape (..., 2, 2)."""
    alpha = np.asarray(alpha, dtype=float)
    c, s = np.cos(alpha), np.sin(alpha)
    return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)


# ---------------------------------------------------------------------------
# angle fields

class AngleField:
    """f : R^N -> R^d with first and second y-derivatives."""

    d: int

    def jet(self, y: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return f (P,d), df (P,d,N) and d2f (P,d,N,N) at y (P,N)."""
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class RadialAngleField(AngleField):
    """f_i(y) = w_i G(|y|) for a shared radial profile G."""

    profile: RadialProfile
    weights: tuple

    @property
    def d(self) -> int:
        return len(self.weights)

    def jet(self, y):
        y = np.asarray(y, dtype=float)
        z = np.linalg.norm(y, axis=-1)
        G = self.profile.G(z)
        g1 = self.profile.Gd(z)
        g2 = self.profile.Gdd(z)
        w = np.asarray(self.weights, dtype=float)
        e = y / z[:, None]
        N = y.shape[1]
        # d_l G(|y|) = G' y_l / z ; d_lk = G'' e_l e_k + G' (delta_lk - e_l e_k) / z
        grad = g1[:, None] * e
        ee = e[:, :, None] * e[:, None, :]
        hess = g2[:, None, None] * ee + (g1 / z)[:, None, None] * (np.eye(N)[None] - ee)
        f = G[:, None] * w[None, :]
        df = w[None, :, None] * grad[:, None, :]
        d2f = w[None, :, None, None] * hess[:, None, :, :]
        return f, df, d2f


@dataclass(frozen=True, eq=False)
class CallableAngleField(AngleField):
    """Arbitrary C^2 angle field from a user jet function."""

    fn: Callable[[np.ndarray], tuple]
    dim: int

    @property
    def d(self) -> int:
        return self.dim

    def jet(self, y):
        f, df, d2f = self.fn(np.asarray(y, dtype=float))
        return np.asarray(f, float), np.asarray(df, float), np.asarray(d2f, float)


# ---------------------------------------------------------------------------
# whirl specification

@dataclass(frozen=True, eq=False)
class WhirlSpec:
    ann: Annulus
    m: tuple
    angles: AngleField
    label: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.m) != self.ann.d:
            raise ValueError(f"winding vector needs {self.ann.d} entries for n={self.ann.n}, got {len(self.m)}")
        if any(int(v) != v for v in self.m):
            raise ValueError("winding numbers must be integers")
        if self.angles.d != self.ann.d:
            raise ValueError("angle field dimension does not match the annulus")

    @property
    def profile(self) -> Optional[RadialProfile]:
        return getattr(self.angles, "profile", None)

    @property
    def weights(self) -> Optional[np.ndarray]:
        w = getattr(self.angles, "weights", None)
        return None if w is None else np.asarray(w, dtype=float)

    # -- factories -----------------------------------------------------------
    @classmethod
    def from_profile(cls, ann: Annulus, m: Sequence[int], profile: RadialProfile,
                     weights: Sequence[float], label: str = "") -> "WhirlSpec":
        if any(int(v) != v for v in m):
            raise ValueError("winding numbers must be integers")
        return cls(ann, tuple(int(v) for v in m), RadialAngleField(profile, tuple(float(w) for w in weights)),
                   label or profile.kind)

    @classmethod
    def identity(cls, ann: Annulus) -> "WhirlSpec":
        from .profile import zero_profile
        return cls.from_profile(ann, (0,) * ann.d, zero_profile(ann.a, ann.b, ann.n), (0.0,) * ann.d, "identity")

    @classmethod
    def linear(cls, ann: Annulus, m: Sequence[int]) -> "WhirlSpec":
        """Non-solution control: f_i = 2 m_i pi (|y| - a)/(b - a)."""
        prof = linear_profile(ann.a, ann.b, ann.n, 1.0)
        return cls.from_profile(ann, m, prof, [float(v) for v in m], "linear")

    # -- evaluation ----------------------------------------------------------
    def angle_jet(self, y):
        return self.angles.jet(np.atleast_2d(y))

    def Q(self, y) -> np.ndarray:
        return assemble_Q(self, y)

    def u(self, x) -> np.ndarray:
        """u(x) = Q(y(x)) x, vectorised over leading axes."""
        x = np.asarray(x, dtype=float)
        shape = x.shape
        xb = x.reshape(-1, self.ann.n)
        y, _ = radial_coords(xb, self.ann)
        Q = assemble_Q(self, y)
        return np.einsum("pij,pj->pi", Q, xb).reshape(shape)

    def jet(self, x) -> "MapJet":
        return map_jet(self, x)

    def boundary_values_ok(self, tol: float = 1e-9) -> bool:
        """f = 0 on |y| = a and f = 2 pi m on |y| = b (radial fields)."""
        prof = self.profile
        if prof is None:
            return True
        w = self.weights
        ga, gb = float(prof.G(prof.a)), float(prof.G(prof.b))
        target = 2 * np.pi * np.asarray(self.m, dtype=float)
        return bool(np.all(np.abs(w * ga) <= tol * (1 + np.abs(target)))
                    and np.all(np.abs(w * gb - target) <= tol * (1 + np.abs(target))))


def assemble_Q(spec: WhirlSpec, y) -> np.ndarray:
    y = np.atleast_2d(np.asarray(y, dtype=float))
    z = np.linalg.norm(y, axis=-1)
    ann = spec.ann
    tol = 1e-9 * ann.b
    if np.any(z < ann.a - tol) or np.any(z > ann.b + tol):
        raise ProfileRangeError("assemble_Q: point outside the closed annulus")
    f, _, _ = spec.angles.jet(y)
    n = ann.n
    Q = np.zeros((y.shape[0], n, n))
    R = rotation(f)  # (P, d, 2, 2)
    for i in range(ann.d):
        Q[:, 2 * i: 2 * i + 2, 2 * i: 2 * i + 2] = R[:, i]
    if not ann.even:
        Q[:, n - 1, n - 1] = 1.0
    return Q


# ---------------------------------------------------------------------------
# jets

@dataclass(frozen=True)
class MapJet:
    """Pointwise derivatives of a whirl; all arrays carry a leading point axis."""

    x: np.ndarray
    y: np.ndarray
    u: np.ndarray
    grad_u: np.ndarray
    lap_u: np.ndarray
    grad_xi: np.ndarray

    @property
    def xi(self) -> np.ndarray:
        return np.einsum("pij,pij->p", self.grad_u, self.grad_u)

    @property
    def det(self) -> np.ndarray:
        return np.linalg.det(self.grad_u)

    @property
    def X(self) -> np.ndarray:
        n = self.x.shape[1]
        return np.einsum("pki,pkj->pij", self.grad_u, self.grad_u) - np.eye(n)

    @property
    def Y(self) -> np.ndarray:
        n = self.x.shape[1]
        return np.einsum("pik,pjk->pij", self.grad_u, self.grad_u) - np.eye(n)


def check_axis(y: np.ndarray, ann: Annulus, delta: Optional[float] = None) -> None:
    delta = ann.delta_axis if delta is None else delta
    planar = y[:, : ann.d]
    if np.any(planar < delta):
        k = int(np.argmin(planar.min(axis=1)))
        raise AxisError(f"point {k} lies within {delta:g} of an axis (y={y[k]})")


def map_jet(spec: WhirlSpec, x, axis_delta: Optional[float] = None) -> MapJet:
    """u, grad u, lap u and grad |grad u|^2 from the Q-block formulas."""
    ann = spec.ann
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y, z = radial_coords(x, ann)
    check_axis(y, ann, axis_delta)
    tol = 1e-9 * ann.b
    if np.any(z < ann.a - tol) or np.any(z > ann.b + tol):
        raise ProfileRangeError("map_jet: point outside the closed annulus")
    f, df, d2f = spec.angles.jet(y)
    u, gu, lap, gxi = _kernels.whirl_jet(x, f, df, d2f, ann.n, ann.d, ann.N)
    return MapJet(x, y, u, gu, lap, gxi)


def radial_spherical(u, grad_u) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """R = |u|, S = u/|u|, grad R = grad_u^t u / |u|, grad S = (I - S S^t) grad_u / |u|."""
    u = np.atleast_2d(np.asarray(u, dtype=float))
    gu = np.asarray(grad_u, dtype=float).reshape(u.shape + (u.shape[-1],))
    R = np.linalg.norm(u, axis=-1)
    if np.any(R < 1e-14):
        raise ValueError("radial/spherical split needs |u| > 1e-14")
    S = u / R[:, None]
    gR = np.einsum("pki,pk->pi", gu, u) / R[:, None]
    n = u.shape[1]
    proj = np.eye(n)[None] - S[:, :, None] * S[:, None, :]
    gS = np.einsum("pij,pjk->pik", proj, gu) / R[:, None, None]
    return R, S, gR, gS
