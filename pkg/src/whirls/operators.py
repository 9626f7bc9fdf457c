"""The operator L[u; A, B] evaluated along independent routes.

    L = X[u] grad A + grad A + A grad_u^t lap u + B grad_u^t u

with A, B evaluated at (|x|, |u|^2, |grad u|^2).  The direct route uses
the kernel jet of u.  The whirl route rebuilds every term from the
Q-block derivatives; the reduced route works with the angle field f on
the y-annulus only.  Chain-rule gradients of A are always analytic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._kernels import _frame_numpy, q_fields_numpy
from .coeff import Coefficient
from .geometry import plane_frame
from .reduced import divergence_terms, reduced_residual
from .whirl import WhirlSpec, check_axis, map_jet

ROUTES = ("direct", "whirl", "reduced", "simplified")


@dataclass(frozen=True)
class OperatorValue:
    """L at a batch of points; args holds (r, s, xi) per point."""

    x: np.ndarray
    value: np.ndarray
    route: str
    args: tuple
    precondition_ok: Optional[bool] = None
    precondition_residual: Optional[float] = None

    @property
    def norm(self) -> np.ndarray:
        return np.linalg.norm(self.value, axis=-1)


def compare(a: OperatorValue, b: OperatorValue) -> tuple[float, float]:
    """(max absolute, max relative) gap; relative to 1 + max |a|."""
    gap = float(np.max(np.linalg.norm(a.value - b.value, axis=-1)))
    return gap, gap / (1.0 + float(np.max(a.norm)))


def _grad_A(Ar, As, Ax, x, r, grad_s, grad_xi):
    theta = x / r[:, None]
    return Ar[:, None] * theta + As[:, None] * grad_s + Ax[:, None] * grad_xi


# ---------------------------------------------------------------------------
# direct

def L_direct(spec: WhirlSpec, A: Coefficient, B: Coefficient, x) -> OperatorValue:
    jet = map_jet(spec, x)
    x = jet.x
    r = np.linalg.norm(x, axis=1)
    s = np.einsum("pi,pi->p", jet.u, jet.u)
    xi = jet.xi
    Av, Ar, As, Ax = A.partials(r, s, xi)
    Bv = B.value(r, s, xi)
    gut_u = np.einsum("pki,pk->pi", jet.grad_u, jet.u)
    gA = _grad_A(Ar, As, Ax, x, r, 2.0 * gut_u, jet.grad_xi)
    val = (np.einsum("pij,pj->pi", jet.X, gA) + gA
           + Av[:, None] * np.einsum("pki,pk->pi", jet.grad_u, jet.lap_u)
           + Bv[:, None] * gut_u)
    return OperatorValue(x, val, "direct", (r, s, xi))


# ---------------------------------------------------------------------------
# whirl (Q-block sums)

def L_whirl(spec: WhirlSpec, A: Coefficient, B: Coefficient, x) -> OperatorValue:
    ann = spec.ann
    n, d, N = ann.n, ann.d, ann.N
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y, gy, hy, ly = _frame_numpy(x, n, d, N)
    check_axis(y, ann)
    f, df, d2f = spec.angles.jet(y)
    Q, dQ, d2Q = q_fields_numpy(f, df, d2f, n, d, N)
    r = np.linalg.norm(x, axis=1)

    dQx = np.einsum("plij,pj->pli", dQ, x)                 # d_l Q x, (P,N,n)
    d2Qx = np.einsum("plkij,pj->plki", d2Q, x)             # (P,N,N,n)
    V = np.einsum("pji,plj->pli", Q, dQx)                  # Q^t d_l Q x
    G = np.einsum("pli,pki->plk", dQx, dQx)                # <d_l Q x, d_k Q x>
    xi = n + np.einsum("pll->p", G)
    s = r * r
    Av, Ar, As, Ax = A.partials(r, s, xi)
    Bv = B.value(r, s, xi)

    # grad xi = sum_l [2 dQ_l^t dQ_l x + 2 sum_k <d2Q_lk x, dQ_l x> grad y_k]
    dQt_dQx = np.einsum("plji,plj->pli", dQ, dQx)          # dQ_l^t dQ_l x
    mixed = np.einsum("plki,pli->plk", d2Qx, dQx)          # <d2Q_lk x, dQ_l x>
    grad_xi = 2 * dQt_dQx.sum(axis=1) + 2 * np.einsum("plk,pki->pi", mixed, gy)
    gA = _grad_A(Ar, As, Ax, x, r, 2.0 * x, grad_xi)

    # X[u] grad xi, split into the A_xi block
    beta = np.einsum("pki,pli->pk", gy, dQt_dQx) + mixed.sum(axis=1)
    Vk = V + np.einsum("pki,pin->pkn", G, gy)
    term_xi = 2 * Ax[:, None] * np.einsum("pk,pkn->pn", beta, Vk)

    # X[u] (2 A_s x + A_r Theta) = (2 A_s + A_r / r) X[u] x
    gyx = np.einsum("pli,pi->pl", gy, x)
    Xx = np.einsum("pl,pli->pi", gyx, V) + np.einsum("plk,pk,pli->pi", G, gyx, gy)
    term_rs = (2 * As + Ar / r)[:, None] * Xx

    # grad_u^t lap u in Q-block form
    QtD2 = np.einsum("pji,pllj->pi", Q, d2Qx)
    QtdQgy = np.einsum("pji,pljk,plk->pi", Q, dQ, gy)
    lap_part = QtD2 + np.einsum("pl,pli->pi", ly, V) + 2 * QtdQgy
    dQkgy = np.einsum("pkij,pkj->pi", dQ, gy)              # sum_k dQ_k grad y_k
    d2kk = np.einsum("pkki->pi", d2Qx)                     # sum_k d2Q_kk x
    coef = (np.einsum("pli,pi->pl", dQx, d2kk) + np.einsum("plk,pk->pl", G, ly)
            + 2 * np.einsum("pli,pi->pl", dQx, dQkgy))
    lap_part = lap_part + np.einsum("pl,pli->pi", coef, gy)

    val = gA + Bv[:, None] * x + term_xi + term_rs + Av[:, None] * lap_part
    return OperatorValue(x, val, "whirl", (r, s, xi))


# ---------------------------------------------------------------------------
# reduced divergence form

def _reduced_pieces(spec: WhirlSpec, A: Coefficient, x):
    ann = spec.ann
    x = np.atleast_2d(np.asarray(x, dtype=float))
    fr = plane_frame(x, ann)
    y, r = fr.y, fr.z
    check_axis(y, ann)
    _, df, d2f = spec.angles.jet(y)
    terms = divergence_terms(A, y, df, d2f, ann.n)
    d = ann.d
    gy = np.zeros_like(fr.w)
    gy[:, :d] = fr.w[:, :d] / y[:, :d, None]
    if not ann.even:
        gy[:, -1, -1] = 1.0
    # grad A = sum_k d_k A grad y_k with d_k A = A_r y_k / r + 2 A_s y_k + A_xi d_k xi
    dA = (terms.Ar / r + 2 * terms.As)[:, None] * y + terms.Axi[:, None] * terms.dxi
    gA = np.einsum("pk,pki->pi", dA, gy)
    sq = np.einsum("pkl,pkl->pk", df, df)
    base = -terms.A[:, None] * sq
    radial = np.einsum("pk,pki->pi", base, fr.w[:, :d])
    return x, r, y, df, terms, gy, fr, gA, radial


def L_reduced(spec: WhirlSpec, A: Coefficient, B: Coefficient, x) -> OperatorValue:
    x, r, y, df, terms, gy, fr, gA, radial = _reduced_pieces(spec, A, x)
    d = spec.ann.d
    D = terms.D
    Bv = B.value(r, r * r, terms.xi)
    ang = np.einsum("pi,pin->pn", D, fr.wperp[:, :d])
    coef = np.einsum("pil,pi->pl", df, y[:, :d] ** 2 * D)
    val = gA + Bv[:, None] * x + radial + ang + np.einsum("pl,pln->pn", coef, gy)
    return OperatorValue(x, val, "reduced", (r, r * r, terms.xi))


def L_simplified(spec: WhirlSpec, A: Coefficient, B: Coefficient, x,
                 tol: float = 1e-8) -> OperatorValue:
    """grad A + B x - A sum |grad f_i|^2 w^i, valid for reduced solutions.

    The reduced residual at the same points is reported; the value is
    returned either way.
    """
    x, r, y, df, terms, gy, fr, gA, radial = _reduced_pieces(spec, A, x)
    Bv = B.value(r, r * r, terms.xi)
    val = gA + Bv[:, None] * x + radial
    res = reduced_residual(spec, A, y)
    return OperatorValue(x, val, "simplified", (r, r * r, terms.xi),
                         precondition_ok=res.max_rel <= tol,
                         precondition_residual=res.max_rel)


def evaluate(route: str, spec: WhirlSpec, A: Coefficient, B: Coefficient, x) -> OperatorValue:
    fn = {"direct": L_direct, "whirl": L_whirl, "reduced": L_reduced, "simplified": L_simplified}
    if route not in fn:
        raise ValueError(f"unknown route {route!r}")
    return fn[route](spec, A, B, x)


def grad_A(spec: WhirlSpec, A: Coefficient, x) -> np.ndarray:
    """Chain-rule grad of A(|x|, |u|^2, |grad u|^2)."""
    jet = map_jet(spec, x)
    r = np.linalg.norm(jet.x, axis=1)
    s = np.einsum("pi,pi->p", jet.u, jet.u)
    _, Ar, As, Ax = A.partials(r, s, jet.xi)
    gut_u = np.einsum("pki,pk->pi", jet.grad_u, jet.u)
    return _grad_A(Ar, As, Ax, jet.x, r, 2.0 * gut_u, jet.grad_xi)


__all__ = ["OperatorValue", "ROUTES", "L_direct", "L_whirl", "L_reduced", "L_simplified",
           "compare", "evaluate", "grad_A"]
