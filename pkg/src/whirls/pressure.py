"""Hydrostatic pressure for whirl solutions and the residual L[u] - grad P.

Two constructions:

* radial: P(x) = A(r, r^2, xi) + G(r) with G(r) = int_a^r s [B - A sigma^2 g'^2] ds,
  exact when every |grad f_i| agrees (sigma^2 = 1 for unit weights);
* path potential: for a vanishing discriminant the 1-form
  omega = r B(r, r^2, n + h^2 z) dr - H h^2 / 2 dz  (h = Hdot(r))
  is closed on the region B = {lo r^2 <= z <= hi r^2}, and P = H + R(|x|, |Hx|^2)
  with R the line integral of omega from (a, lo a^2).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .coeff import Coefficient, discriminant
from .geometry import Annulus, radial_coords, sphere_points
from .numerics import quad_gl
from .operators import L_direct
from .profile import GL_ORDER, RadialProfile
from .reduced import closed_form_profile
from .whirl import WhirlSpec, map_jet

PATH_PANELS = 8


class NotClosedError(ValueError):
    """The pressure 1-form is not closed (nonzero discriminant)."""


class PathError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PressureField:
    kind: str                                  # "radial" | "path_potential"
    ann: Annulus
    fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    radial: Optional[RadialProfile] = field(default=None, repr=False)
    generator: tuple = ()                      # 2 m_i pi per plane block
    anchor: tuple = ()
    meta: dict = field(default_factory=dict)
    alternate: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)

    def __call__(self, x) -> np.ndarray:
        return self.evaluate(x)

    def evaluate(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return self.fn(x)

    def shifted(self, c: float) -> "PressureField":
        alt = None if self.alternate is None else (lambda x, _g=self.alternate: _g(x) + c)
        return PressureField(self.kind, self.ann, lambda x, _f=self.fn: _f(x) + c, self.radial,
                             self.generator, self.anchor, dict(self.meta, shift=c), alt)

    def to_rows(self) -> list[tuple[float, float]]:
        if self.radial is None:
            return []
        return [(float(r), float(g)) for r, g in zip(self.radial.nodes, self.radial.values)]


def _unavailable(_r):
    raise NotImplementedError("second derivative of the pressure profile is not tracked")


def _integral_profile(fn, ann: Annulus, count: int, kind: str) -> RadialProfile:
    return RadialProfile.build(ann.a, ann.b, ann.n, 0.0, float("nan"), kind, fn, _unavailable, count)


# ---------------------------------------------------------------------------
# radial

def radial_pressure(A: Coefficient, B: Coefficient, profile: RadialProfile, ann: Annulus,
                    weights: Optional[Sequence[float]] = None, best_effort: bool = False,
                    count: int = 129) -> PressureField:
    """P = A + G with G' = r [B - A sigma^2 g'^2] at xi = n + r^2 sigma^2 g'^2.

    ``weights`` are the per-plane multipliers of the profile (default all
    ones).  Unequal |weights| admit no radial pressure; ``best_effort``
    then uses their mean square and still returns a field.
    """
    w = np.ones(ann.d) if weights is None else np.asarray(weights, dtype=float)
    mags = np.abs(w)
    equal = bool(np.all(mags == mags[0])) if mags.size else True
    if not equal and not best_effort:
        raise ValueError("radial pressure needs equal |weights|; pass best_effort=True to force")
    if not ann.even and np.any(w != 0) and not best_effort:
        raise ValueError("radial pressure in odd dimension requires a trivial angle field")
    sigma2 = float(np.mean(w ** 2)) if w.size else 0.0
    # sum_i y_i^2 w_i^2 g'^2 = sigma^2 r^2 g'^2 when the weights agree (even n)
    n = ann.n

    def integrand(r):
        r = np.asarray(r, dtype=float)
        g2 = sigma2 * profile.Gd(r) ** 2
        xi = n + r * r * g2
        return r * (B.value(r, r * r, xi) - A.value(r, r * r, xi) * g2)

    G = _integral_profile(integrand, ann, count, "pressure")

    def fn(x):
        y, r = radial_coords(x, ann)
        gd = profile.Gd(r)
        xi = n + np.einsum("pi,i->p", y[:, : ann.d] ** 2, w ** 2) * gd ** 2
        return A.value(r, r * r, xi) + G.G(r)

    gen = tuple(float(2 * np.pi * v) for v in (w * profile.m if profile.m else w))
    return PressureField("radial", ann, fn, G, gen, (ann.a, 0.0),
                         {"equal_weights": equal, "best_effort": bool(best_effort)})


def radial_pressure_for(spec: WhirlSpec, A: Coefficient, B: Coefficient,
                        best_effort: bool = False) -> PressureField:
    if spec.profile is None:
        raise ValueError("radial pressure needs a radial angle field")
    return radial_pressure(A, B, spec.profile, spec.ann, spec.weights, best_effort)


# ---------------------------------------------------------------------------
# path potential

@dataclass(frozen=True)
class PathCheck:
    max_gap: float
    points: int


def path_potential(H: Coefficient, B: Coefficient, m: Sequence[int], ann: Annulus,
                   samples: int = 256) -> PressureField:
    """P = H + R(|x|, |Hx|^2) with R integrated along two paths inside B.

    Path 1 follows the lower boundary z = lo rho^2 and then rises in z at
    fixed r; path 2 rises in z at r = a and then follows z = (z/r^2) rho^2.
    Both stay inside the region, where omega is known to be closed.
    """
    m = tuple(int(v) for v in m)
    if len(m) != ann.d:
        raise ValueError(f"winding vector needs {ann.d} entries, got {len(m)}")
    n = ann.n
    unit = closed_form_profile(H, ann, 1.0)
    m2 = np.asarray(m, dtype=float) ** 2
    equal = len({abs(v) for v in m}) <= 1
    if (equal and ann.even) or not any(m):
        # the region collapses to a curve: the radial formula applies
        spec_w = np.sign(m) if any(m) else np.zeros(ann.d)
        prof = closed_form_profile(H, ann, float(abs(m[0])) if any(m) else 0.0)
        out = radial_pressure(H, B, prof, ann, spec_w)
        return PressureField("radial", ann, out.fn, out.radial, out.generator, out.anchor,
                             dict(out.meta, deferred_from="path_potential"))

    from .classify import _xi_sweep
    dec = discriminant(H, B, n).is_identically_zero(ann.a, ann.b, _xi_sweep(H, ann, m, samples),
                                                    samples=samples)
    if not dec.identically_zero:
        raise NotClosedError(f"discriminant is not identically zero (max ratio {dec.max_ratio:.3g})")

    four_pi2 = 4 * np.pi ** 2
    lo = 0.0 if not ann.even else four_pi2 * float(m2.min())
    hi = four_pi2 * float(m2.max())

    def hdot2(r):
        return (unit.Gd(r) / (2 * np.pi)) ** 2

    def Hval(r):
        return H.value(r, r * r, np.full(np.shape(r), float(n)))

    def along(kappa, r):
        """int_a^r omega along z = kappa rho^2; kappa, r arrays."""

        def integrand(rho):
            h2 = hdot2(rho)
            z = kappa[:, None] * rho * rho
            return rho * B.value(rho, rho * rho, n + h2 * z) - Hval(rho) * h2 * kappa[:, None] * rho

        return quad_gl(integrand, np.full(r.shape, ann.a), r, GL_ORDER, panels=PATH_PANELS)

    def rise(r, z0, z1):
        return -0.5 * Hval(r) * hdot2(r) * (z1 - z0)

    def R_path1(r, z):
        k = np.full(r.shape, lo)
        return along(k, r) + rise(r, lo * r * r, z)

    def R_path2(r, z):
        kappa = z / (r * r)
        return rise(np.full(r.shape, ann.a), lo * ann.a ** 2, kappa * ann.a ** 2) + along(kappa, r)

    tol = 1e-9

    def rz(x):
        y, r = radial_coords(x, ann)
        z = four_pi2 * np.einsum("pi,i->p", y[:, : ann.d] ** 2, m2)
        if np.any(z < lo * r * r * (1 - tol) - tol) or np.any(z > hi * r * r * (1 + tol) + tol):
            raise PathError("point maps outside the potential region")
        return r, z

    def fn(x):
        r, z = rz(x)
        return Hval(r) + R_path1(r, z)

    def second(x):
        r, z = rz(x)
        return Hval(r) + R_path2(r, z)

    gen = tuple(float(2 * np.pi * v) for v in m)
    return PressureField("path_potential", ann, fn, None, gen, (ann.a, lo * ann.a ** 2),
                         {"delta": dec.to_dict(), "region": [lo, hi]}, second)


def path_independence(P: PressureField, x) -> PathCheck:
    """Gap between the two integration paths at points x."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if P.alternate is None:
        return PathCheck(0.0, len(x))
    gap = np.abs(P.evaluate(x) - P.alternate(x))
    return PathCheck(float(np.max(gap)), len(x))


# ---------------------------------------------------------------------------
# residual

@dataclass(frozen=True)
class PdeReport:
    max_abs: float
    l2: float
    scale: float
    boundary_error: float
    det_error: float
    points: int

    @property
    def max_rel(self) -> float:
        return self.max_abs / self.scale

    def to_dict(self) -> dict:
        return {"max_abs": self.max_abs, "max_rel": self.max_rel, "l2": self.l2, "scale": self.scale,
                "boundary_error": self.boundary_error, "det_error": self.det_error,
                "points": self.points}


def fd_grad_pressure(P: PressureField, x, h: Optional[float] = None) -> np.ndarray:
    """Central differences of P with a fixed step (default 1e-5 a)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    h = 1e-5 * P.ann.a if h is None else h
    n = x.shape[1]
    out = np.empty_like(x)
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        out[:, j] = (P.evaluate(x + e) - P.evaluate(x - e)) / (2 * h)
    return out


def pde_residual(spec: WhirlSpec, A: Coefficient, B: Coefficient, P: PressureField, x,
                 h: Optional[float] = None, boundary_points: int = 64) -> PdeReport:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    L = L_direct(spec, A, B, x).value
    gP = fd_grad_pressure(P, x, h)
    diff = np.linalg.norm(L - gP, axis=1)
    scale = 1.0 + float(np.max(np.linalg.norm(L, axis=1)))
    ann = spec.ann
    bnd = 0.0
    for rad in (ann.a, ann.b):
        xs = sphere_points(ann, rad, boundary_points, seed=0)
        bnd = max(bnd, float(np.max(np.abs(spec.u(xs) - xs))))
    det = float(np.max(np.abs(map_jet(spec, x).det - 1.0)))
    return PdeReport(float(np.max(diff)), float(np.sqrt(np.mean(diff ** 2))), scale, bnd, det, len(x))
