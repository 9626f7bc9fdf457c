"""The reduced (unconstrained) divergence-form system and its radial solutions.

Components f_i of the angle field solve div[A_i(y, grad f) grad f_i] = 0 on
the reduced annulus, with A_i = A(z, z^2, n + sum_l y_l^2 |grad f_l|^2) y_i^2 J(y)
and J(y) = y_1 ... y_d.  Two radial families are solved here: the
xi-independent closed form and the flux boundary value problem.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .coeff import Coefficient, DomainError
from .geometry import Annulus
from .numerics import (DEFAULT, BracketError, ConvergenceError, NumericsConfig, chebyshev_nodes, quad_adaptive,
                       quad_gl, solve_bracketed, solve_monotone_vec)
from .profile import GL_ORDER, RadialProfile, zero_profile
from .whirl import WhirlSpec


class SolverError(RuntimeError):
    pass


class WindingError(ValueError):
    pass


# ---------------------------------------------------------------------------
# coefficient fields and the expanded divergence

def xi_of(y: np.ndarray, df: np.ndarray, n: int) -> np.ndarray:
    """n + sum_{l <= d} y_l^2 |grad f_l|^2."""
    d = df.shape[1]
    return n + np.einsum("pl,pl->p", y[:, :d] ** 2, np.einsum("plk,plk->pl", df, df))


def coeff_field(A: Coefficient, y, df, n: int) -> np.ndarray:
    """A_i(y, grad f) for i = 1..d, shape (P, d)."""
    y = np.atleast_2d(np.asarray(y, dtype=float))
    df = np.asarray(df, dtype=float).reshape(y.shape[0], -1, y.shape[1])
    d = df.shape[1]
    z = np.linalg.norm(y, axis=1)
    Av = A.value(z, z * z, xi_of(y, df, n))
    jac = np.prod(y[:, :d], axis=1)
    return Av[:, None] * y[:, :d] ** 2 * jac[:, None]


@dataclass(frozen=True)
class DivergenceTerms:
    """Pieces of the expanded divergence divided by J y_i^2."""

    D: np.ndarray          # (P, d) the full value
    magnitude: np.ndarray  # (P,) sum of absolute term sizes, for relative scales
    A: np.ndarray
    Ar: np.ndarray
    As: np.ndarray
    Axi: np.ndarray
    xi: np.ndarray
    dxi: np.ndarray        # (P, N) y-derivatives of xi


def divergence_terms(A: Coefficient, y, df, d2f, n: int) -> DivergenceTerms:
    """(1/(J y_i^2)) div[A_i grad f_i] from the expanded first-order form."""
    y = np.atleast_2d(np.asarray(y, dtype=float))
    P, N = y.shape
    d = df.shape[1]
    z = np.linalg.norm(y, axis=1)
    xi = xi_of(y, df, n)
    Av, Ar, As, Ax = A.partials(z, z * z, xi)
    yd = y[:, :d]
    sq = np.einsum("pkl,pkl->pk", df, df)                      # |grad f_k|^2, (P,d)
    dfd = df[:, :, :d]                                         # d_k f_i for k <= d, (P,i,k)
    diag_i = np.einsum("pii->pi", dfd)                         # d_i f_i
    # sum_j sum_l y_j^2 d2_lk f_j d_l f_j  -> (P,k)
    mix = np.einsum("pj,pjlk,pjl->pk", yd ** 2, d2f, df)
    t1 = 2 * Ax[:, None] * np.einsum("pk,pk,pik->pi", yd, sq, dfd)
    t2 = Av[:, None] * np.einsum("pik,pk->pi", dfd, 1.0 / yd)
    t3 = 2 * Av[:, None] * diag_i / yd
    t4 = 2 * Ax[:, None] * np.einsum("pk,pik->pi", mix, df)
    t5 = (2 * As + Ar / z)[:, None] * np.einsum("pk,pik->pi", y, df)
    t6 = Av[:, None] * np.einsum("pikk->pi", d2f)
    D = t1 + t2 + t3 + t4 + t5 + t6
    mag = sum(np.abs(t) for t in (t1, t2, t3, t4, t5, t6)).max(axis=1)
    dxi = 2.0 * mix
    dxi[:, :d] += 2.0 * yd * sq
    return DivergenceTerms(D, mag, Av, Ar, As, Ax, xi, dxi)


@dataclass(frozen=True)
class ReducedResidual:
    y: np.ndarray
    D: np.ndarray          # div[A_i grad f_i] / (J y_i^2)
    div: np.ndarray        # div[A_i grad f_i]
    scale: float

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.D))) if self.D.size else 0.0

    @property
    def max_rel(self) -> float:
        return self.max_abs / self.scale

    @property
    def l2(self) -> float:
        return float(np.sqrt(np.mean(self.D ** 2))) if self.D.size else 0.0


def reduced_residual(spec: WhirlSpec, A: Coefficient, y) -> ReducedResidual:
    y = np.atleast_2d(np.asarray(y, dtype=float))
    _, df, d2f = spec.angles.jet(y)
    terms = divergence_terms(A, y, df, d2f, spec.ann.n)
    d = spec.ann.d
    jac = np.prod(y[:, :d], axis=1)
    div = terms.D * (jac[:, None] * y[:, :d] ** 2)
    scale = 1.0 + float(np.max(terms.magnitude)) if len(y) else 1.0
    return ReducedResidual(y, terms.D, div, scale)


# ---------------------------------------------------------------------------
# radial slopes

def _slope_curvature(A: Coefficient, n: int, r, g) -> np.ndarray:
    """G'' from differentiating r^{n+1} A(r, r^2, n + r^2 G'^2) G' = const."""
    r = np.asarray(r, dtype=float)
    xi = n + (r * g) ** 2
    Av, Ar, As, Ax = A.partials(r, r * r, xi)
    num = (n + 1) / r * Av + Ar + 2 * r * As + 2 * r * g * g * Ax
    den = Av + 2 * (r * g) ** 2 * Ax
    return -g * num / den


def flux_map(A: Coefficient, n: int):
    """phi(r, g) = r^{n+1} A(r, r^2, n + r^2 g^2) g and d phi / d g."""

    def phi(r, g):
        xi = n + (r * g) ** 2
        Av, _, _, Ax = A.partials(r, r * r, xi)
        rn = r ** (n + 1)
        return rn * Av * g, rn * (Av + 2 * (r * g) ** 2 * Ax)

    return phi


def slope_from_flux(A: Coefficient, n: int, r, c: float) -> np.ndarray:
    """Solve phi(r, g) = |c| for g >= 0 pointwise; odd in c."""
    r = np.asarray(r, dtype=float)
    if c == 0:
        return np.zeros_like(r)
    phi = flux_map(A, n)
    target = np.full(r.shape, abs(c))
    hi0 = abs(c) / (r ** (n + 1) * A.value(r, r * r, np.full(r.shape, float(n))))
    g = solve_monotone_vec(lambda g: phi(r, g), target, hi0)
    return np.sign(c) * g


# ---------------------------------------------------------------------------
# closed form (xi-independent A = H)

def closed_form_profile(H: Coefficient, ann: Annulus, m: float,
                        cfg: NumericsConfig = DEFAULT) -> RadialProfile:
    """G(r) = 2 m pi Hc(r)/Hc(b) with Hc(r) = int_a^r dz / (z^{n+1} H(z, z^2))."""
    if not H.xi_free:
        raise ValueError("closed form requires a xi-independent coefficient")
    n = ann.n
    if m == 0:
        return zero_profile(ann.a, ann.b, n, cfg.radial_nodes)

    def integrand(z):
        z = np.asarray(z, dtype=float)
        return 1.0 / (z ** (n + 1) * H.value(z, z * z, np.full(z.shape, float(n))))

    Hb, err = quad_adaptive(lambda z: float(integrand(z)), ann.a, ann.b, cfg.quad_abs_tol)
    c = 2 * np.pi * m / Hb

    def slope(r):
        return c * integrand(r)

    def curv(r):
        return _slope_curvature(H, n, r, slope(r))

    return RadialProfile.build(ann.a, ann.b, n, m, c, "closed_form", slope, curv, cfg.radial_nodes,
                               meta={"H_b": Hb, "H_b_err": err})


# ---------------------------------------------------------------------------
# boundary value problem

def _winding_rule(ann: Annulus, panels_nodes: int):
    nodes = chebyshev_nodes(ann.a, ann.b, panels_nodes)
    return nodes[:-1], nodes[1:]


def solve_bvp(A: Coefficient, ann: Annulus, m: float, cfg: NumericsConfig = DEFAULT,
              bracket: Optional[tuple[float, float]] = None,
              check_winding: bool = True) -> RadialProfile:
    """Flux-shooting solve of d/dr[r^{n+1} A(r, r^2, n + r^2 G'^2) G'] = 0.

    Inner: G'(r; c) from the flux relation (monotone in G').  Outer: c from
    the winding condition int_a^b G'(r; c) dr = 2 m pi (monotone in c).
    """
    n = ann.n
    if m == 0:
        return zero_profile(ann.a, ann.b, n, cfg.radial_nodes)
    target = 2 * np.pi * abs(m)
    lo_e, hi_e = _winding_rule(ann, cfg.radial_nodes)
    phi = flux_map(A, n)
    calls = [0]

    def slope(r, c):
        return slope_from_flux(A, n, r, c)

    def winding(c):
        calls[0] += 1
        return float(quad_gl(lambda r: slope(r, c), lo_e, hi_e, GL_ORDER).sum())

    def dwinding(c):
        def inv(r):
            g = slope(r, c)
            return 1.0 / phi(r, g)[1]
        return float(quad_gl(inv, lo_e, hi_e, GL_ORDER).sum())

    if bracket is None:
        # the xi-frozen flux is exact for xi-independent A and a bracket end otherwise
        base = quad_gl(lambda z: 1.0 / (z ** (n + 1) * A.value(z, z * z, np.full(np.shape(z), float(n)))),
                       lo_e, hi_e, GL_ORDER).sum()
        c0 = target / base
        bracket = (0.0, c0 * (1 + 1e-9))
    try:
        c_star = solve_bracketed(winding, target, bracket[0], bracket[1],
                                 tol=cfg.root_tol, dg=dwinding, max_iter=cfg.max_iter)
    except (ConvergenceError, BracketError, DomainError) as e:
        raise SolverError(f"flux solve failed: {e}") from e
    c_star = float(np.sign(m) * c_star)

    def slope_star(r):
        return slope(np.asarray(r, dtype=float), c_star)

    def curv_star(r):
        r = np.asarray(r, dtype=float)
        return _slope_curvature(A, n, r, slope_star(r))

    meta = {"iterations": calls[0], "bracket": tuple(float(b) for b in bracket)}
    if check_winding:
        # independent adaptive-Simpson winding, reported not enforced
        wsimp, werr = quad_adaptive(lambda r: float(slope_star(np.array([r]))[0]), ann.a, ann.b,
                                    cfg.quad_abs_tol * 10)
        meta.update(winding_simpson=wsimp, winding_simpson_err=werr)
    return RadialProfile.build(ann.a, ann.b, n, m, c_star, "bvp", slope_star, curv_star,
                               cfg.radial_nodes, meta=meta)


# ---------------------------------------------------------------------------
# spec factories

def closed_form_spec(H: Coefficient, ann: Annulus, m: Sequence[int],
                     cfg: NumericsConfig = DEFAULT) -> WhirlSpec:
    """Per-component closed form f_i = 2 m_i pi Hc(|y|)/Hc(b)."""
    unit = closed_form_profile(H, ann, 1.0, cfg)
    return WhirlSpec.from_profile(ann, m, unit, [float(v) for v in m], "closed_form")


def bvp_spec(A: Coefficient, ann: Annulus, m: Sequence[int], cfg: NumericsConfig = DEFAULT) -> WhirlSpec:
    """Whirl from the radial BVP.

    For xi-independent A the unit solution is scaled per component.  For
    xi-dependent A all |m_i| must agree; f_i = sign(m_i) G(|y|; |m|).
    """
    m = [int(v) for v in m]
    if not any(m):
        prof = zero_profile(ann.a, ann.b, ann.n, cfg.radial_nodes)
        return WhirlSpec.from_profile(ann, m, prof, [0.0] * len(m), "bvp")
    if A.xi_free:
        unit = solve_bvp(A, ann, 1.0, cfg)
        return WhirlSpec.from_profile(ann, m, unit, [float(v) for v in m], "bvp")
    mags = {abs(v) for v in m}
    if len(mags) > 1:
        raise WindingError("a xi-dependent coefficient needs equal |m_i| for the radial ansatz")
    mag = mags.pop() if mags else 0
    prof = solve_bvp(A, ann, float(mag), cfg)
    return WhirlSpec.from_profile(ann, m, prof, [float(np.sign(v)) if mag else 0.0 for v in m], "bvp")


# ---------------------------------------------------------------------------
# uniqueness evidence

@dataclass
class UniquenessReport:
    passed: bool
    max_diff: float
    fluxes: list
    tolerance: float
    routes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "max_diff": self.max_diff, "fluxes": self.fluxes,
                "tolerance": self.tolerance, "routes": self.routes}


def uniqueness_crosscheck(A: Coefficient, ann: Annulus, m: float, cfg: NumericsConfig = DEFAULT,
                          tol: float = 1e-7, samples: int = 257) -> UniquenessReport:
    """Solve from 8 different flux brackets (plus the closed form when it applies)."""
    r = np.linspace(ann.a, ann.b, samples)
    ref = solve_bvp(A, ann, m, cfg)
    profiles = []
    routes = []
    c0 = abs(ref.flux) if ref.flux else 1.0
    for lo, hi in [(0.0, 1e-3), (0.0, 0.1), (0.0, 0.5), (0.0, 1.0), (0.0, 2.0),
                   (0.0, 10.0), (0.0, 100.0), (0.3, 3.0)]:
        if m == 0:
            p = solve_bvp(A, ann, m, cfg)
        else:
            p = solve_bvp(A, ann, m, cfg, bracket=(lo * c0, hi * c0), check_winding=False)
        profiles.append(p)
        routes.append(f"bracket[{lo:g},{hi:g}]x{c0:.6g}")
    if A.xi_free:
        profiles.append(closed_form_profile(A, ann, m, cfg))
        routes.append("closed_form")
    base = ref.G(r)
    diffs = [float(np.max(np.abs(p.G(r) - base))) for p in profiles]
    worst = max(diffs) if diffs else 0.0
    return UniquenessReport(worst <= tol, worst, [float(p.flux) for p in profiles], tol, routes)
