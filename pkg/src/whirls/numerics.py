"""Shared numerical kernels.

Finite differences of callables, adaptive Simpson and Gauss-Legendre
quadrature, bracketed monotone root finding and adaptive RK4 stepping.
Everything here is re-entrant and works on plain numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Optional

import numpy as np


class QuadratureError(RuntimeError):
    pass


class BracketError(RuntimeError):
    pass


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class FdConfig:
    """Finite difference step policy: h = h0 * (1 + |x|)."""

    h0: float = 1e-5
    order: int = 2

    def __post_init__(self):
        if not self.h0 > 0:
            raise ValueError("h0 must be positive")
        if self.order not in (2, 4):
            raise ValueError("stencil order must be 2 or 4")

    def step(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.h0 * (1.0 + np.linalg.norm(x, axis=-1))

    def with_step(self, h0: float) -> "FdConfig":
        return replace(self, h0=h0)


@dataclass(frozen=True)
class NumericsConfig:
    """One budget for every tolerance and step used by the library."""

    h0: float = 1e-5
    fd_order: int = 2
    quad_abs_tol: float = 1e-11
    root_tol: float = 1e-12
    radial_nodes: int = 129
    max_iter: int = 200

    @property
    def fd(self) -> FdConfig:
        return FdConfig(self.h0, self.fd_order)

    @classmethod
    def from_dict(cls, d: Optional[dict]) -> "NumericsConfig":
        if not d:
            return cls()
        known = {k: d[k] for k in cls.__dataclass_fields__ if k in d}
        unknown = set(d) - set(known)
        if unknown:
            raise ValueError(f"unknown numerics keys: {sorted(unknown)}")
        return cls(**known)


DEFAULT = NumericsConfig()


# ---------------------------------------------------------------------------
# finite differences

_STENCILS = {
    2: ((-1.0, 1.0), (-0.5, 0.5)),
    4: ((-2.0, -1.0, 1.0, 2.0), (1 / 12, -8 / 12, 8 / 12, -1 / 12)),
}


def fd_jacobian(f: Callable, x, cfg: FdConfig = FdConfig()) -> np.ndarray:
    """Central-difference Jacobian of a vectorised map f: R^n -> R^m.

    ``f`` takes an array of shape (..., n) and returns (..., m) (or (...)
    for scalar maps).  ``x`` may be a single point (n,) or a batch (P, n);
    the result has shape (m, n) or (P, m, n).
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xb = np.atleast_2d(x)
    P, n = xb.shape
    h = cfg.step(xb)  # (P,)
    offsets, weights = _STENCILS[cfg.order]
    k = len(offsets)
    # one batched call: (k, n, P, n)
    eye = np.eye(n)
    pts = xb[None, None, :, :] + (np.asarray(offsets)[:, None, None, None]
                                   * h[None, None, :, None]
                                   * eye[None, :, None, :])
    vals = np.asarray(f(pts.reshape(-1, n)), dtype=float)
    scalar = vals.ndim == 1
    vals = vals.reshape(k, n, P, -1)
    w = np.asarray(weights)[:, None, None, None]
    d = (w * vals).sum(axis=0) / h[None, :, None]  # (n, P, m)
    jac = np.transpose(d, (1, 2, 0))  # (P, m, n)
    if scalar:
        jac = jac[:, 0, :]
    return jac[0] if single else jac


def fd_gradient(f: Callable, x, cfg: FdConfig = FdConfig()) -> np.ndarray:
    """Gradient of a scalar vectorised function."""
    return fd_jacobian(f, x, cfg)


def fd_divergence(f: Callable, x, cfg: FdConfig = FdConfig()) -> np.ndarray:
    J = fd_jacobian(f, x, cfg)
    return np.trace(J, axis1=-2, axis2=-1)


def fd_curl(f: Callable, x, cfg: FdConfig = FdConfig()) -> np.ndarray:
    """Skew matrix curl F with entries dF_i/dx_j - dF_j/dx_i."""
    J = fd_jacobian(f, x, cfg)
    return J - np.swapaxes(J, -1, -2)


def fd_laplacian(f: Callable, x, h: Optional[float] = None,
                 cfg: FdConfig = FdConfig()) -> np.ndarray:
    """Second-order central Laplacian of a vectorised map (scalar or vector)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xb = np.atleast_2d(x)
    P, n = xb.shape
    hh = np.full(P, h) if h is not None else np.sqrt(cfg.step(xb) * cfg.h0) * 1e2
    eye = np.eye(n)
    offs = np.array([-1.0, 1.0])
    pts = xb[None, None] + offs[:, None, None, None] * hh[None, None, :, None] * eye[None, :, None, :]
    fc = np.asarray(f(xb), dtype=float)
    fp = np.asarray(f(pts.reshape(-1, n)), dtype=float).reshape((2, n) + fc.shape)
    lap = (fp.sum(axis=(0, 1)) - 2 * n * fc) / (hh.reshape((P,) + (1,) * (fc.ndim - 1)) ** 2)
    return lap[0] if single else lap


def observed_order(errors, ratio: float = 2.0) -> np.ndarray:
    """Convergence orders log(e_k / e_{k+1}) / log(ratio) for a step sequence."""
    e = np.asarray(errors, dtype=float)
    return np.log(e[:-1] / e[1:]) / np.log(ratio)


# ---------------------------------------------------------------------------
# quadrature

def quad_adaptive(f: Callable[[float], float], a: float, b: float,
                  abs_tol: float = 1e-11, max_depth: int = 50) -> tuple[float, float]:
    """Adaptive Simpson quadrature of a scalar function.

    Returns ``(value, err_est)``; the estimate is the accumulated
    Richardson correction magnitude, which bounds the true error for smooth
    integrands.  Raises QuadratureError when ``max_depth`` is exceeded.
    """
    if a == b:
        return 0.0, 0.0
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    fa, fb = f(a), f(b)
    c = 0.5 * (a + b)
    fc = f(c)
    whole = (b - a) / 6.0 * (fa + 4 * fc + fb)
    total = 0.0
    err = 0.0
    # explicit stack keeps deep refinement off the Python call stack
    stack = [(a, b, fa, fc, fb, whole, abs_tol, 0)]
    while stack:
        lo, hi, flo, fmid, fhi, s, tol, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        left = (mid - lo) / 6.0 * (flo + 4 * flm + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4 * frm + fhi)
        delta = left + right - s
        if abs(delta) <= 15.0 * tol or (depth >= 6 and hi - lo < 1e-14 * (b - a)):
            total += left + right + delta / 15.0
            err += abs(delta) / 15.0
            continue
        if depth >= max_depth:
            raise QuadratureError(f"adaptive Simpson exceeded depth {max_depth} near x={mid:.6g}")
        stack.append((mid, hi, fmid, frm, fhi, right, 0.5 * tol, depth + 1))
        stack.append((lo, mid, flo, flm, fmid, left, 0.5 * tol, depth + 1))
    return sign * total, err


@lru_cache(maxsize=None)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def quad_gl(f: Callable[[np.ndarray], np.ndarray], lo, hi, order: int = 16,
            panels: int = 1) -> np.ndarray:
    """Composite Gauss-Legendre rule, vectorised over interval endpoints.

    ``lo`` and ``hi`` broadcast against each other; ``f`` receives an array
    of abscissae of shape (..., panels * order) and must be elementwise.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    lo, hi = np.broadcast_arrays(lo, hi)
    xg, wg = gauss_legendre(order)
    edges = lo[..., None] + (hi - lo)[..., None] * np.linspace(0.0, 1.0, panels + 1)
    a = edges[..., :-1, None]
    b = edges[..., 1:, None]
    half = 0.5 * (b - a)
    nodes = (0.5 * (a + b) + half * xg).reshape(lo.shape + (-1,))
    weights = (half * wg).reshape(lo.shape + (-1,))
    return (np.asarray(f(nodes)) * weights).sum(axis=-1)


def chebyshev_nodes(a: float, b: float, count: int) -> np.ndarray:
    """Chebyshev-Lobatto points on [a, b], increasing, endpoints included."""
    k = np.arange(count)
    t = -np.cos(np.pi * k / (count - 1))
    r = 0.5 * (a + b) + 0.5 * (b - a) * t
    r[0], r[-1] = a, b
    return r


# ---------------------------------------------------------------------------
# root finding

def solve_bracketed(g: Callable[[float], float], target: float, lo: float, hi: float,
                    tol: float = 1e-12, dg: Optional[Callable[[float], float]] = None,
                    grow: float = 2.0, max_grow: int = 200, max_iter: int = 400) -> float:
    """Root of a monotone increasing scalar function g(x) = target.

    The bracket [lo, hi] is grown geometrically upwards until it straddles
    the target.  Bisection guarantees progress; when ``dg`` is given,
    Newton steps that stay inside the bracket are taken instead.
    Convergence is declared when |g(x) - target| <= tol * max(1, |target|)
    or the bracket has collapsed to machine precision.
    """
    glo, ghi = g(lo) - target, g(hi) - target
    n = 0
    while glo > 0:
        if n >= max_grow:
            raise BracketError(f"no straddle below target {target}")
        width = max(hi - lo, 1.0)
        hi, ghi = lo, glo
        lo = lo - grow * width
        glo = g(lo) - target
        n += 1
    while ghi < 0:
        if n >= max_grow:
            raise BracketError(f"no straddle for target {target} up to x={hi:.3e}")
        width = max(hi - lo, abs(hi), 1e-300)
        lo, glo = hi, ghi
        hi = hi + grow * width
        ghi = g(hi) - target
        n += 1
    scale = tol * max(1.0, abs(target))
    x = 0.5 * (lo + hi)
    for _ in range(max_iter):
        gx = g(x) - target
        if abs(gx) <= scale:
            return x
        if gx < 0:
            lo = x
        else:
            hi = x
        step = None
        if dg is not None:
            d = dg(x)
            if d > 0:
                xn = x - gx / d
                if lo < xn < hi:
                    step = xn
        x = step if step is not None else 0.5 * (lo + hi)
        if hi - lo <= 4 * np.finfo(float).eps * max(abs(lo), abs(hi), 1e-300):
            return x
    raise ConvergenceError(f"solve_bracketed: no convergence after {max_iter} iterations")


def solve_monotone_vec(phi: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]],
                       target: np.ndarray, hi0: np.ndarray, max_iter: int = 200) -> np.ndarray:
    """Vectorised root of increasing maps g >= 0 with phi(0) = 0.

    ``phi(g)`` returns (value, derivative) elementwise.  Each lane solves
    phi(g) = target >= 0 on [0, inf): bracket doubling from ``hi0``, then
    Newton safeguarded by bisection, stopped at machine-precision residual.
    """
    target = np.asarray(target, dtype=float)
    lo = np.zeros_like(target)
    hi = np.broadcast_to(np.asarray(hi0, dtype=float), target.shape).copy()
    hi = np.where(hi > 0, hi, 1.0)
    for _ in range(2000):
        val, der = phi(hi)
        short = val < target
        if not short.any():
            break
        lo = np.where(short, hi, lo)
        hi = np.where(short, 2.0 * hi, hi)
    else:
        raise BracketError("solve_monotone_vec: bracket growth failed")
    # Newton from the upper end; phi is evaluated there already
    x = hi.copy()
    done = target == 0
    x[done] = 0.0
    eps = np.finfo(float).eps
    for _ in range(max_iter):
        res = val - target
        lo = np.where(res < 0, x, lo)
        hi = np.where(res > 0, x, hi)
        settled = (np.abs(res) <= 8 * eps * np.abs(target)) | (hi - lo <= 4 * eps * hi) | done
        if np.all(settled):
            return x
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = x - res / der
        ok = (der > 0) & (xn > lo) & (xn < hi)
        xn = np.where(ok, xn, 0.5 * (lo + hi))
        # converged lanes stay put; a repeated Newton step would bisect them away
        xn = np.where(settled, x, xn)
        stalled = np.all((xn == x) | settled)
        x = xn
        if stalled:
            return x
        val, der = phi(x)
    raise ConvergenceError("solve_monotone_vec: Newton did not settle")


# ---------------------------------------------------------------------------
# ODE stepping

def rk4_step(rhs: Callable, t: float, y: np.ndarray, h: float) -> np.ndarray:
    k1 = rhs(t, y)
    k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def rk4_adaptive(rhs: Callable, y0, t1: float, t0: float = 0.0, tol: float = 1e-12,
                 h0: Optional[float] = None, max_steps: int = 100000) -> np.ndarray:
    """Integrate y' = rhs(t, y) from t0 to t1 with step-doubling RK4."""
    y = np.array(y0, dtype=float)
    span = t1 - t0
    if span == 0:
        return y
    direction = np.sign(span)
    h = abs(h0) if h0 else abs(span) / 16.0
    t = t0
    steps = 0
    while (t1 - t) * direction > 0:
        h = min(h, abs(t1 - t))
        full = rk4_step(rhs, t, y, direction * h)
        half = rk4_step(rhs, t, y, direction * h / 2)
        half = rk4_step(rhs, t + direction * h / 2, half, direction * h / 2)
        err = np.max(np.abs(half - full)) / 15.0
        if err <= tol * max(1.0, np.max(np.abs(y))) or h < 1e-14 * abs(span):
            y = half + (half - full) / 15.0
            t = t + direction * h
            h *= min(4.0, 0.9 * (tol / max(err, 1e-300)) ** 0.2) if err > 0 else 4.0
        else:
            h *= max(0.1, 0.9 * (tol / err) ** 0.2)
        steps += 1
        if steps > max_steps:
            raise ConvergenceError("rk4_adaptive: too many steps")
    return y
