"""Curl of plane-radial fields U = sum_k Gamma_k(y) w^k and the whirl dichotomy.

For such fields

    curl U = sum_{k<l} kappa_kl (w^k (x) w^l - w^l (x) w^k),
    kappa_kl = d_l Gamma_k / y_l - d_k Gamma_l / y_k,

so U is curl free iff y_k d_l Gamma_k = y_l d_k Gamma_l for every pair.
Curl matrices use the convention grad U - grad U^t with (grad U)_ij = d_j U_i.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Optional, Sequence

import numpy as np

from .coeff import Coefficient, DeltaDecision, discriminant
from .geometry import Annulus, plane_frame
from .numerics import FdConfig, fd_curl
from .reduced import divergence_terms
from .whirl import WhirlSpec, check_axis

CURL_TOL = 1e-8


@dataclass(frozen=True)
class CurlMatrix:
    """curl U at a batch of points: matrix (P, n, n) and kappa (P, N, N)."""

    x: np.ndarray
    matrix: np.ndarray
    kappa: np.ndarray

    @property
    def skew_defect(self) -> float:
        return float(np.max(np.abs(self.matrix + np.swapaxes(self.matrix, 1, 2))))


GammaFn = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]


def _grad_y(fr, ann: Annulus) -> np.ndarray:
    g = np.zeros_like(fr.w)
    g[:, : ann.d] = fr.w[:, : ann.d] / fr.y[:, : ann.d, None]
    if not ann.even:
        g[:, -1, -1] = 1.0
    return g


def curl_scalar_combo(gamma: GammaFn, ann: Annulus, x) -> CurlMatrix:
    """Basis-coefficient curl of U = sum Gamma_k(y) w^k.

    ``gamma(y)`` returns Gamma (P, N) and its y-Jacobian (P, N, N) with
    entry [k, l] = d_l Gamma_k.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    fr = plane_frame(x, ann)
    check_axis(fr.y, ann)
    _, dG = gamma(fr.y)
    gy = _grad_y(fr, ann)
    # sum_kl d_l Gamma_k (w^k (x) grad y_l - grad y_l (x) w^k)
    half = np.einsum("pkl,pki,plj->pij", dG, fr.w, gy)
    mat = half - np.swapaxes(half, 1, 2)
    y = fr.y
    with np.errstate(divide="ignore", invalid="ignore"):
        t = dG / y[:, None, :]
        kappa = t - np.swapaxes(t, 1, 2)
    return CurlMatrix(x, mat, kappa)


def field_of(gamma: GammaFn, ann: Annulus) -> Callable[[np.ndarray], np.ndarray]:
    """x -> U(x) = sum Gamma_k(y) w^k, for finite-difference checks."""

    def U(x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        fr = plane_frame(x, ann)
        G, _ = gamma(fr.y)
        return np.einsum("pk,pki->pi", G, fr.w)

    return U


def fd_curl_field(gamma: GammaFn, ann: Annulus, x, cfg: FdConfig = FdConfig()) -> np.ndarray:
    return fd_curl(field_of(gamma, ann), np.atleast_2d(np.asarray(x, dtype=float)), cfg)


# ---------------------------------------------------------------------------
# the whirl field U = L - grad A

def whirl_gamma(spec: WhirlSpec, A: Coefficient, B: Coefficient) -> GammaFn:
    """Gamma_k = B - A |grad f_k|^2 (and Gamma_N = B in odd dimension)."""
    n = spec.ann.n
    d = spec.ann.d

    def gamma(y):
        y = np.atleast_2d(np.asarray(y, dtype=float))
        _, df, d2f = spec.angles.jet(y)
        terms = divergence_terms(A, y, df, d2f, n)
        z = np.linalg.norm(y, axis=1)
        Bv, Br, Bs, Bx = B.partials(z, z * z, terms.xi)
        # d_l of a function of (z, z^2, xi(y))
        radial = y / z[:, None]
        dB = (Br + 2 * z * Bs)[:, None] * radial + Bx[:, None] * terms.dxi
        dA = (terms.Ar + 2 * z * terms.As)[:, None] * radial + terms.Axi[:, None] * terms.dxi
        sq = np.einsum("pkl,pkl->pk", df, df)
        dsq = 2 * np.einsum("pkj,pkjl->pkl", df, d2f)
        G = np.repeat(Bv[:, None], y.shape[1], axis=1)
        dG = np.repeat(dB[:, None, :], y.shape[1], axis=1)
        G[:, :d] -= terms.A[:, None] * sq
        dG[:, :d] -= dA[:, None, :] * sq[:, :, None] + terms.A[:, None, None] * dsq
        return G, dG

    return gamma


@dataclass(frozen=True)
class CurlCondition:
    """Pair residuals y_k d_l Gamma_k - y_l d_k Gamma_l (k < l)."""

    pairs: list
    residual: np.ndarray   # (P, npairs)
    scale: float
    tolerance: float

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.residual))) if self.residual.size else 0.0

    @property
    def max_rel(self) -> float:
        return self.max_abs / self.scale

    @property
    def curl_free(self) -> bool:
        return self.max_rel <= self.tolerance


def curl_condition(spec: WhirlSpec, A: Coefficient, B: Coefficient, x,
                   tol: float = CURL_TOL) -> CurlCondition:
    ann = spec.ann
    x = np.atleast_2d(np.asarray(x, dtype=float))
    fr = plane_frame(x, ann)
    check_axis(fr.y, ann)
    _, dG = whirl_gamma(spec, A, B)(fr.y)
    y = fr.y
    t = y[:, :, None] * dG            # [k, l] = y_k d_l Gamma_k
    N = ann.N
    pairs = [(k, l) for k in range(N) for l in range(k + 1, N)]
    if pairs:
        res = np.stack([t[:, k, l] - t[:, l, k] for k, l in pairs], axis=1)
    else:
        res = np.zeros((len(x), 0))
    scale = 1.0 + float(np.max(np.abs(t)))
    return CurlCondition(pairs, res, scale, tol)


# ---------------------------------------------------------------------------
# classification

@dataclass(frozen=True)
class Verdict:
    winding: tuple
    delta_status: str          # "identically_zero" | "nonzero"
    admissible: bool
    reason: str
    delta: Optional[DeltaDecision] = None

    def to_dict(self) -> dict:
        out = {"winding": list(self.winding), "delta_status": self.delta_status,
               "admissible": self.admissible, "reason": self.reason}
        if self.delta is not None:
            out["delta"] = self.delta.to_dict()
        return out


def _xi_sweep(H: Coefficient, ann: Annulus, m: Sequence[int], samples: int, per_radius: int = 5):
    """xi values met by the candidate closed-form whirl at each radius."""
    from .reduced import closed_form_profile

    unit = closed_form_profile(H, ann, 1.0)
    r = np.linspace(ann.a, ann.b, samples)
    gd2 = (unit.Gd(r) / (2 * np.pi)) ** 2       # Hdot^2
    m2 = np.asarray(m, dtype=float) ** 2
    lo = 0.0 if (not ann.even or m2.size == 0) else float(m2.min())
    hi = float(m2.max()) if m2.size else 0.0
    t = np.linspace(0.0, 1.0, per_radius)
    zfac = lo + (hi - lo) * t                   # z / (4 pi^2 r^2)
    xi = ann.n + 4 * np.pi ** 2 * gd2[:, None] * (r ** 2)[:, None] * zfac[None, :]
    return np.concatenate([np.full((samples, 1), float(ann.n)), xi], axis=1)


def classify(ann: Annulus, m: Sequence[int], H: Coefficient, B: Coefficient,
             samples: int = 256) -> Verdict:
    m = tuple(int(v) for v in m)
    if len(m) != ann.d:
        raise ValueError(f"winding vector needs {ann.d} entries, got {len(m)}")
    disc = discriminant(H, B, ann.n)
    dec = disc.is_identically_zero(ann.a, ann.b, _xi_sweep(H, ann, m, samples), samples=samples)
    if dec.identically_zero:
        return Verdict(m, "identically_zero", True, "discriminant vanishes: every winding vector", dec)
    if ann.even:
        ok = len({abs(v) for v in m}) <= 1
        why = "nonzero discriminant, even n: requires equal |m_i|"
    else:
        ok = all(v == 0 for v in m)
        why = "nonzero discriminant, odd n: only m = 0"
    return Verdict(m, "nonzero", ok, why, dec)


def numerical_verdict(ann: Annulus, m: Sequence[int], H: Coefficient, B: Coefficient, x,
                      tol: float = CURL_TOL) -> CurlCondition:
    """Curl test of the closed-form candidate for winding m on points x."""
    from .reduced import closed_form_spec

    spec = closed_form_spec(H, ann, m)
    return curl_condition(spec, H, B, x, tol)


def winding_vectors(d: int, bound: int) -> list[tuple]:
    return [tuple(v) for v in product(range(-bound, bound + 1), repeat=d)]


@dataclass
class SweepResult:
    verdicts: list
    numeric: list = field(default_factory=list)

    @property
    def admissible(self) -> list:
        return [v.winding for v in self.verdicts if v.admissible]

    @property
    def misclassified(self) -> list:
        return [v.winding for v, c in zip(self.verdicts, self.numeric) if v.admissible != c.curl_free]


def sweep(ann: Annulus, H: Coefficient, B: Coefficient, bound: int, x=None,
          tol: float = CURL_TOL) -> SweepResult:
    """Classify every m with |m|_inf <= bound; with points x also run the curl test."""
    out = SweepResult([])
    for m in winding_vectors(ann.d, bound):
        out.verdicts.append(classify(ann, m, H, B))
        if x is not None:
            out.numeric.append(numerical_verdict(ann, m, H, B, x, tol))
    return out
