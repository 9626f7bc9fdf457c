"""Scalar coefficients of (r, s, xi) with exact first partials."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np

from .dual import DomainError, Dual3
from .expr import Node, evaluate, free_variables, parse_expr

KINDS = ("A", "H", "B", "F")


class CoefficientError(ValueError):
    pass


@dataclass(frozen=True)
class ValidityBox:
    r: tuple[float, float]
    s: tuple[float, float]
    xi: tuple[float, float]

    @classmethod
    def for_annulus(cls, n: int, a: float, b: float, xi_max: float = 1e4) -> "ValidityBox":
        return cls((a, b), (a * a, b * b), (float(n), float(xi_max)))

    def lattice(self, count: int = 20) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        r = np.linspace(*self.r, count)
        s = np.linspace(*self.s, count)
        lo, hi = self.xi
        if lo > 0 and hi / lo > 100:
            xi = np.geomspace(lo, hi, count)
        else:
            xi = np.linspace(lo, hi, count)
        R, S, X = np.meshgrid(r, s, xi, indexing="ij")
        return R.ravel(), S.ravel(), X.ravel()


@dataclass(frozen=True, eq=False)
class Coefficient:
    """Immutable scalar function of (r, s, xi).

    ``fn`` maps three arguments (floats, arrays or Dual3) to a value of the
    same flavour.  ``kind`` is one of A (general), H (xi-independent A),
    B (lower order) or F (stored energy).
    """

    fn: Callable
    kind: str = "A"
    label: str = ""
    xi_free: bool = False
    box: Optional[ValidityBox] = None
    ast: Optional[Node] = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise CoefficientError(f"unknown coefficient kind {self.kind!r}")
        if self.kind == "H" and not self.xi_free:
            raise CoefficientError("an H-kind coefficient must not depend on xi")
        if self.kind in ("A", "H") and self.box is not None:
            self.check_validity(self.box)

    # -- evaluation ----------------------------------------------------------
    def __call__(self, r, s, xi):
        return self.value(r, s, xi)

    def value(self, r, s, xi) -> np.ndarray:
        r, s, xi = np.broadcast_arrays(*(np.asarray(t, dtype=float) for t in (r, s, xi)))
        out = self.fn(r, s, xi)
        out = np.broadcast_to(np.asarray(out, dtype=float), r.shape)
        return _finite(out, self.label)

    def partials(self, r, s, xi) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(value, d/dr, d/ds, d/dxi) by forward-mode dual arithmetic."""
        r, s, xi = np.broadcast_arrays(*(np.asarray(t, dtype=float) for t in (r, s, xi)))
        out = self.fn(Dual3.variable(r, 0), Dual3.variable(s, 1), Dual3.variable(xi, 2))
        if not isinstance(out, Dual3):
            out = Dual3.const(np.broadcast_to(np.asarray(out, dtype=float), r.shape))
        parts = [np.broadcast_to(np.asarray(p, dtype=float), r.shape) for p in (out.v,) + out.d]
        return tuple(_finite(p, self.label) for p in parts)

    def dual(self, r, s, xi):
        """Evaluate on caller-supplied (possibly nested) dual arguments."""
        return self.fn(r, s, xi)

    # -- checks --------------------------------------------------------------
    def check_validity(self, box: ValidityBox, count: int = 20) -> None:
        R, S, X = box.lattice(count)
        v, _, _, dxi = self.partials(R, S, X)
        if np.any(v <= 0):
            k = int(np.argmin(v))
            raise CoefficientError(
                f"{self.label or 'A'} is not positive at (r, s, xi)=({R[k]:.4g}, {S[k]:.4g}, {X[k]:.4g})")
        if np.any(dxi < -1e-12 * (1 + np.abs(v))):
            k = int(np.argmin(dxi))
            raise CoefficientError(
                f"{self.label or 'A'} decreases in xi at (r, s, xi)=({R[k]:.4g}, {S[k]:.4g}, {X[k]:.4g})")

    def as_kind(self, kind: str, box: Optional[ValidityBox] = None) -> "Coefficient":
        return Coefficient(self.fn, kind, self.label, self.xi_free, box, self.ast)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "label": self.label, "xi_free": self.xi_free}


def _finite(x: np.ndarray, label: str) -> np.ndarray:
    if not np.all(np.isfinite(x)):
        raise DomainError(f"coefficient {label or '?'} produced a non-finite value")
    return x


def eval_with_partials(c: Coefficient, r, s, xi):
    return c.partials(r, s, xi)


# ---------------------------------------------------------------------------
# constructors

def from_expr(src: str, kind: str = "A", params: Optional[Mapping[str, float]] = None,
              box: Optional[ValidityBox] = None) -> Coefficient:
    params = dict(params or {})
    ast = parse_expr(src, params)
    xi_free = "xi" not in free_variables(ast)

    def fn(r, s, xi, _ast=ast, _params=params):
        env = dict(_params)
        env.update(r=r, s=s, xi=xi)
        out = evaluate(_ast, env)
        if isinstance(r, Dual3) and not isinstance(out, Dual3):
            # expression free of the variables: promote to a constant dual
            out = _constant_like(out, r)
        return out

    return Coefficient(fn, kind, src.strip(), xi_free, box, ast)


def _constant_like(value, like):
    if isinstance(like, Dual3):
        return Dual3.const(_constant_like(value, like.v))
    return np.broadcast_to(np.asarray(value, dtype=float), np.shape(like)).copy()


def constant(value: float, kind: str = "A", box: Optional[ValidityBox] = None) -> Coefficient:
    return from_expr(repr(float(value)), kind, box=box)


def power_law(alpha: float, beta: float, kind: str = "H",
              box: Optional[ValidityBox] = None) -> Coefficient:
    """H(r, s) = r^alpha s^beta."""
    return from_expr("r^alpha * s^beta", kind, {"alpha": alpha, "beta": beta}, box)


def p_growth(p: float, kind: str = "A", box: Optional[ValidityBox] = None) -> Coefficient:
    """A(r, s, xi) = xi^((p-2)/2) with p > 1."""
    if not p > 1:
        raise CoefficientError("p-growth requires p > 1")
    return from_expr("xi^((p-2)/2)", kind, {"p": p}, box)


def zero_discriminant_pair(n: int) -> tuple[Coefficient, Coefficient]:
    """H = 1 and B = (n+1) xi / r^2: the discriminant vanishes identically."""
    H = from_expr("1", "H")
    B = from_expr("k * xi / r^2", "B", {"k": float(n + 1)})
    return H, B


FAMILIES = {
    "constant": lambda spec, kind, box: constant(spec.get("value", 1.0), kind, box),
    "power_law": lambda spec, kind, box: power_law(spec.get("alpha", 0.0), spec.get("beta", 0.0), kind, box),
    "p_growth": lambda spec, kind, box: p_growth(spec["p"], kind, box),
}


def from_config(spec, kind: str, box: Optional[ValidityBox] = None,
                params: Optional[Mapping[str, float]] = None) -> Coefficient:
    """Build from an expression string or a {"family": ...} mapping."""
    if isinstance(spec, (int, float)):
        return constant(spec, kind, box)
    if isinstance(spec, str):
        return from_expr(spec, kind, params, box)
    if isinstance(spec, Mapping):
        fam = spec.get("family")
        if fam not in FAMILIES:
            raise CoefficientError(f"unknown coefficient family {fam!r}")
        try:
            return FAMILIES[fam](spec, kind, box)
        except KeyError as e:
            raise CoefficientError(f"family {fam} is missing parameter {e.args[0]}") from None
    raise CoefficientError(f"cannot build a coefficient from {spec!r}")


# ---------------------------------------------------------------------------
# discriminant

@dataclass(frozen=True)
class DeltaDecision:
    identically_zero: bool
    max_ratio: float
    threshold: float
    samples: int

    def to_dict(self) -> dict:
        return {"identically_zero": self.identically_zero, "max_ratio": self.max_ratio,
                "threshold": self.threshold, "samples": self.samples}


DELTA_THRESHOLD = 1e-10
DELTA_SAMPLES = 256


@dataclass(frozen=True, eq=False)
class Discriminant:
    """r, xi -> 2(n+1)H + r H_r + 2 r^2 [H_s - B_xi] at (r, r^2, xi)."""

    H: Coefficient
    B: Coefficient
    n: int

    def __call__(self, r, xi) -> np.ndarray:
        return self.components(r, xi)[0]

    def components(self, r, xi) -> tuple[np.ndarray, np.ndarray]:
        r = np.asarray(r, dtype=float)
        s = r * r
        h, hr, hs, _ = self.H.partials(r, s, xi)
        _, _, _, bxi = self.B.partials(r, s, xi)
        delta = 2 * (self.n + 1) * h + r * hr + 2 * s * (hs - bxi)
        scale = 1.0 + np.abs(2 * (self.n + 1) * h)
        return delta, scale

    def is_identically_zero(self, a: float, b: float, xi_samples=None,
                            threshold: float = DELTA_THRESHOLD,
                            samples: int = DELTA_SAMPLES) -> DeltaDecision:
        """Sampled decision on [a, b] times the supplied xi values.

        ``xi_samples`` is either None (xi = n only) or an array broadcastable
        against the radial samples, e.g. shape (samples, k) for k xi values
        per radius, or a callable r -> xi array.
        """
        r = np.linspace(a, b, samples)
        if xi_samples is None:
            xi = np.full((samples, 1), float(self.n))
        elif callable(xi_samples):
            xi = np.asarray(xi_samples(r), dtype=float).reshape(samples, -1)
        else:
            xi = np.asarray(xi_samples, dtype=float)
            if xi.ndim <= 1:
                xi = np.broadcast_to(xi.reshape(1, -1), (samples, max(xi.size, 1)))
            elif xi.shape[0] != samples:
                raise ValueError(f"xi samples need {samples} rows, got {xi.shape[0]}")
        R = np.broadcast_to(r[:, None], xi.shape)
        delta, scale = self.components(R, xi)
        ratio = float(np.max(np.abs(delta) / scale))
        return DeltaDecision(ratio <= threshold, ratio, threshold, int(delta.size))


def discriminant(H: Coefficient, B: Coefficient, n: int) -> Discriminant:
    if not H.xi_free:
        raise CoefficientError("discriminant requires a xi-independent H")
    if B.kind not in ("B",):
        raise CoefficientError(f"discriminant expects a B-kind coefficient, got {B.kind}")
    return Discriminant(H, B, n)
