"""Energies, volume-preserving flows and the first variation along them.

E[u] = int W(|x|, |u|^2, |grad u|^2) dx over the annulus.  A stored energy
F induces A = F_xi and B = -F_s.  Test deformations are u_t = Y(u, t) with
Y the flow of a compactly supported divergence-free field v, so
det grad u_t = det grad u = 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from . import _kernels
from .coeff import Coefficient, ValidityBox
from .coeff.dual import Dual3
from .geometry import Annulus, radial_coords
from .numerics import ConvergenceError, gauss_legendre
from .whirl import WhirlSpec, map_jet

DELTA = 1e-3
TOL_VAR = 1e-4
BALL_ORDER = {2: 128, 3: 40, 4: 20, 5: 12, 6: 10}


# ---------------------------------------------------------------------------
# stored energies

def _lift(v, index):
    """Seed direction ``index`` on top of a (possibly dual) argument."""
    from .coeff.dual import ones_like, zeros_like

    z, o = zeros_like(v), ones_like(v)
    return Dual3(v, tuple(o if k == index else z for k in range(3)))


def _partial_fn(F: Coefficient, index: int, sign: float):
    def fn(r, s, xi):
        out = F.dual(_lift(r, 0), _lift(s, 1), _lift(xi, 2))
        if not isinstance(out, Dual3):
            return 0.0 * r
        return sign * out.d[index]
    return fn


@dataclass(frozen=True, eq=False)
class StoredEnergy:
    """W(x, u, grad u) = F(|x|, |u|^2, |grad u|^2)."""

    F: Coefficient
    A: Coefficient
    B: Coefficient

    @classmethod
    def from_coefficient(cls, F: Coefficient, ann: Optional[Annulus] = None) -> "StoredEnergy":
        F = F if F.kind == "F" else F.as_kind("F")
        A = Coefficient(_partial_fn(F, 2, 1.0), "A", f"d/dxi[{F.label}]")
        B = Coefficient(_partial_fn(F, 1, -1.0), "B", f"-d/ds[{F.label}]")
        if ann is not None:
            box = ValidityBox.for_annulus(ann.n, ann.a, ann.b)
            R, S, X = box.lattice(8)
            if np.all(A.partials(R, S, X)[3] == 0.0):
                A = Coefficient(A.fn, "A", A.label, True)
        return cls(F, A, B)

    def density(self, r, s, xi) -> np.ndarray:
        return self.F.value(r, s, xi)

    def variational_defect(self, box: ValidityBox, count: int = 12) -> float:
        """max |A_s + B_xi| over a lattice; zero for induced pairs."""
        R, S, X = box.lattice(count)
        As = self.A.partials(R, S, X)[2]
        Bxi = self.B.partials(R, S, X)[3]
        return float(np.max(np.abs(As + Bxi)))


# ---------------------------------------------------------------------------
# divergence-free fields

@dataclass(frozen=True, eq=False)
class DivFreeField:
    """v_i = sum_j d_j Psi_ij, Psi = amp * bump(|y - c|/R) * (K + sum_k (y - c)_k L[k]).

    K and every L[k] are skew, so div v = 0 identically; the bump is
    exp(-1/(1 - s)) with s = |y - c|^2 / R^2.
    """

    c: np.ndarray
    R: float
    amp: float
    K: np.ndarray
    L: np.ndarray

    @property
    def n(self) -> int:
        return self.c.shape[0]

    def __call__(self, y) -> np.ndarray:
        return self.jet(y)[0]

    def jet(self, y) -> tuple[np.ndarray, np.ndarray]:
        y = np.atleast_2d(np.asarray(y, dtype=float))
        return _kernels.bump_field_numpy(y, self.c, self.R, self.amp, self.K, self.L)

    def divergence(self, y) -> np.ndarray:
        return np.einsum("pii->p", self.jet(y)[1])

    def in_support(self, y) -> np.ndarray:
        y = np.atleast_2d(np.asarray(y, dtype=float))
        return np.einsum("pi,pi->p", y - self.c, y - self.c) < self.R ** 2

    def flow(self, y0, t: float, tol: float = 1e-12, h_max: float = 0.02,
             max_doublings: int = 12) -> tuple[np.ndarray, np.ndarray]:
        """(Y(y0, t), grad_y Y) by RK4 with step doubling until the runs agree."""
        y0 = np.atleast_2d(np.asarray(y0, dtype=float))
        if t == 0 or self.amp == 0:
            return y0.copy(), np.broadcast_to(np.eye(self.n), y0.shape + (self.n,)).copy()
        steps = max(2, int(np.ceil(abs(t) / h_max)))
        prev = _kernels.flow(y0, t, steps, self.c, self.R, self.amp, self.K, self.L)
        last = np.inf
        for _ in range(max_doublings):
            steps *= 2
            cur = _kernels.flow(y0, t, steps, self.c, self.R, self.amp, self.K, self.L)
            err = max(float(np.max(np.abs(cur[0] - prev[0]), initial=0.0)),
                      float(np.max(np.abs(cur[1] - prev[1]), initial=0.0)))
            prev = cur
            # stop at tolerance, or once halving the step no longer helps (roundoff floor)
            if err <= tol or (err < 1e3 * tol and err > 0.5 * last):
                return cur
            last = err
        raise ConvergenceError(f"flow did not settle (last difference {err:.3g})")

    def to_dict(self) -> dict:
        return {"center": self.c.tolist(), "radius": self.R, "amplitude": self.amp}


def zero_field(n: int) -> DivFreeField:
    return DivFreeField(np.zeros(n), 1.0, 0.0, np.zeros((n, n)), np.zeros((n, n, n)))


def _skew(rng, n):
    a = rng.normal(size=(n, n))
    return a - a.T


def random_divfree(ann: Annulus, rng: np.random.Generator, amp: float = 1.0) -> DivFreeField:
    """Bump of radius 0.3 (b - a) centred at a random point well inside the annulus."""
    n = ann.n
    w = ann.width
    R = 0.3 * w
    e = rng.normal(size=n)
    e /= np.linalg.norm(e)
    rho = rng.uniform(ann.a + 0.35 * w, ann.b - 0.35 * w)
    K = _skew(rng, n)
    L = np.stack([_skew(rng, n) for _ in range(n)])
    return DivFreeField(rho * e, R, amp, K, L)


# ---------------------------------------------------------------------------
# quadrature over the annulus
#
# x = (y_1 e^{i th_1}, ..., y_d e^{i th_d} [, y_N]) has dx = prod_{l<=d} y_l dy dth.
# y runs over the N-dimensional shell a < |y| < b (y_l >= 0 for l <= d) in
# hyperspherical coordinates; plane angles use the trapezoid rule.

@dataclass(frozen=True)
class EnergyGrid:
    radial: int = 48
    polar: int = 16
    planar: int = 256

    def coarser(self) -> "EnergyGrid":
        return EnergyGrid(max(4, self.radial // 2), max(4, self.polar // 2), max(8, self.planar // 2))


def _hyperspherical(ann: Annulus, grid: EnergyGrid) -> tuple[np.ndarray, np.ndarray]:
    """Nodes y (M, N) on the shell and weights including |y|^{N-1} and the sine powers."""
    N = ann.N
    t, wt = gauss_legendre(grid.radial)
    rho = 0.5 * (ann.b - ann.a) * t + 0.5 * (ann.a + ann.b)
    axes = [rho]
    weights = [0.5 * (ann.b - ann.a) * wt * rho ** (N - 1)]
    tp, wp = gauss_legendre(grid.polar)
    for j in range(1, N):
        lo = -0.5 * np.pi if (j == N - 1 and not ann.even) else 0.0
        hi = 0.5 * np.pi
        phi = 0.5 * (hi - lo) * tp + 0.5 * (hi + lo)
        axes.append(phi)
        weights.append(0.5 * (hi - lo) * wp * np.abs(np.sin(phi)) ** (N - 1 - j))
    grids = np.meshgrid(*axes, indexing="ij")
    wgrid = np.meshgrid(*weights, indexing="ij")
    w = np.prod(np.stack([g.ravel() for g in wgrid]), axis=0)
    r = grids[0].ravel()
    ang = [g.ravel() for g in grids[1:]]
    y = np.empty((r.size, N))
    run = r.copy()
    for k in range(N - 1):
        y[:, k] = run * np.cos(ang[k])
        run = run * np.sin(ang[k])
    y[:, N - 1] = run
    return y, w


MAX_NODES = 2_000_000


@lru_cache(maxsize=16)
def _nodes(n: int, a: float, b: float, grid: EnergyGrid):
    ann = Annulus(n, a, b)
    d = ann.d
    count = grid.radial * grid.polar ** (ann.N - 1) * grid.planar ** d
    if count > MAX_NODES:
        raise ValueError(f"energy grid needs {count} nodes (limit {MAX_NODES}); use a smaller EnergyGrid")
    ys, ws = _hyperspherical(ann, grid)
    th = 2 * np.pi * np.arange(grid.planar) / grid.planar
    wth = 2 * np.pi / grid.planar
    jac = np.prod(ys[:, :d], axis=1) * ws * wth ** d
    mesh = np.stack(np.meshgrid(*([th] * d), indexing="ij"), -1).reshape(-1, d)
    M, K = ys.shape[0], mesh.shape[0]
    x = np.zeros((M, K, n))
    for l in range(d):
        x[:, :, 2 * l] = ys[:, l, None] * np.cos(mesh[None, :, l])
        x[:, :, 2 * l + 1] = ys[:, l, None] * np.sin(mesh[None, :, l])
    if not ann.even:
        x[:, :, n - 1] = ys[:, -1, None]
    x = x.reshape(-1, n)
    w = np.repeat(jac, K)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def quadrature(ann: Annulus, grid: EnergyGrid = EnergyGrid()) -> tuple[np.ndarray, np.ndarray]:
    """Nodes (M, n) and weights (M,) for integrals over the annulus."""
    return _nodes(ann.n, float(ann.a), float(ann.b), grid)


# ---------------------------------------------------------------------------
# energy and its first variation

@dataclass(frozen=True)
class EnergyValue:
    value: float
    error_estimate: float
    nodes: int


def _energy_at(spec: WhirlSpec, W: StoredEnergy, x, w) -> float:
    jet = map_jet(spec, x, axis_delta=0.0)
    r = np.linalg.norm(x, axis=1)
    # fixed node order keeps the sum deterministic
    return float(np.dot(w, W.density(r, r * r, jet.xi)))


@lru_cache(maxsize=16)
def _ball_rule(n: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss nodes of the unit cube that fall inside the unit ball."""
    t, wt = gauss_legendre(order)
    pts = np.stack(np.meshgrid(*([t] * n), indexing="ij"), -1).reshape(-1, n)
    wts = np.prod(np.stack(np.meshgrid(*([wt] * n), indexing="ij"), -1).reshape(-1, n), axis=1)
    keep = np.einsum("pi,pi->p", pts, pts) < 1.0
    pts, wts = pts[keep], wts[keep]
    pts.flags.writeable = False
    wts.flags.writeable = False
    return pts, wts


def energy_change(spec: WhirlSpec, W: StoredEnergy, v: DivFreeField, t: float,
                  order: Optional[int] = None) -> float:
    """E[u_t] - E[u], integrated over the support of v in the image.

    u_t differs from u only where u(x) lies in the ball; substituting
    y = u(x) (volume preserving, x = Q(y)^t y) turns the change into a
    smooth integral over that ball.
    """
    if t == 0 or v.amp == 0:
        return 0.0
    n = spec.ann.n
    order = order or BALL_ORDER.get(n, 12)
    pts, wts = _ball_rule(n, order)
    y = v.c + v.R * pts
    w = wts * v.R ** n
    x = np.einsum("pji,pj->pi", spec.Q(radial_coords(y, spec.ann)[0]), y)
    jet = map_jet(spec, x, axis_delta=0.0)
    r = np.linalg.norm(x, axis=1)
    yt, F = v.flow(y, t)
    gut = np.einsum("pij,pjk->pik", F, jet.grad_u)
    W1 = W.density(r, np.einsum("pi,pi->p", yt, yt), np.einsum("pij,pij->p", gut, gut))
    W0 = W.density(r, r * r, jet.xi)
    return float(np.dot(w, W1 - W0))


def energy(spec: WhirlSpec, W: StoredEnergy, grid: EnergyGrid = EnergyGrid(),
           estimate_error: bool = True) -> EnergyValue:
    x, w = quadrature(spec.ann, grid)
    E = _energy_at(spec, W, x, w)
    err = float("nan")
    if estimate_error:
        xc, wc = quadrature(spec.ann, grid.coarser())
        err = abs(E - _energy_at(spec, W, xc, wc))
    return EnergyValue(E, err, len(x))


def deformed_energy(spec: WhirlSpec, W: StoredEnergy, v: DivFreeField, t: float,
                    grid: EnergyGrid = EnergyGrid()) -> float:
    return energy(spec, W, grid, estimate_error=False).value + energy_change(spec, W, v, t)


@dataclass(frozen=True)
class FirstVariation:
    derivative: float
    energy: float
    delta: float
    tolerance: float

    @property
    def bound(self) -> float:
        return self.tolerance * (1.0 + abs(self.energy))

    @property
    def passed(self) -> bool:
        return abs(self.derivative) <= self.bound

    def to_dict(self) -> dict:
        return {"derivative": self.derivative, "energy": self.energy, "delta": self.delta,
                "tolerance": self.tolerance, "bound": self.bound, "pass": self.passed}


def first_variation(spec: WhirlSpec, W: StoredEnergy, v: DivFreeField, delta: float = DELTA,
                    grid: EnergyGrid = EnergyGrid(), tol: float = TOL_VAR) -> FirstVariation:
    """(E[u_delta] - E[u_-delta]) / (2 delta); the common E[u] cancels exactly."""
    E0 = energy(spec, W, grid, estimate_error=False).value
    if v.amp == 0:
        return FirstVariation(0.0, E0, delta, tol)
    Ep = energy_change(spec, W, v, delta)
    Em = energy_change(spec, W, v, -delta)
    return FirstVariation((Ep - Em) / (2 * delta), E0, delta, tol)


def det_along_flow(spec: WhirlSpec, v: DivFreeField, x, t: float) -> np.ndarray:
    """det grad u_t at points x, with grad u_t = grad_y Y(u(x), t) grad u(x)."""
    jet = map_jet(spec, x)
    _, F = v.flow(jet.u, t)
    return np.linalg.det(np.einsum("pij,pjk->pik", F, jet.grad_u))
