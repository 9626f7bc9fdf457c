"""Forward-mode dual numbers in three directions (r, s, xi).

A Dual3 carries a value and a tuple of three partials.  Both may be
numpy arrays or Dual3 instances themselves, so nesting a Dual3 inside
another gives exact second partials (used for stored energies).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    """Evaluation outside the domain of an elementary function."""


@dataclass(frozen=True, eq=False)
class Dual3:
    v: object
    d: tuple

    def __post_init__(self):
        if len(self.d) != 3:
            raise ValueError("Dual3 needs exactly three partials")

    @staticmethod
    def variable(value, index: int) -> "Dual3":
        z = zeros_like(value)
        o = ones_like(value)
        return Dual3(value, tuple(o if k == index else z for k in range(3)))

    @staticmethod
    def const(value) -> "Dual3":
        z = zeros_like(value)
        return Dual3(value, (z, z, z))

    def __neg__(self):
        return Dual3(-self.v, tuple(-p for p in self.d))

    def __pos__(self):
        return self

    def __add__(self, o):
        if isinstance(o, Dual3):
            return Dual3(self.v + o.v, tuple(p + q for p, q in zip(self.d, o.d)))
        return Dual3(self.v + o, self.d)

    __radd__ = __add__

    def __sub__(self, o):
        if isinstance(o, Dual3):
            return Dual3(self.v - o.v, tuple(p - q for p, q in zip(self.d, o.d)))
        return Dual3(self.v - o, self.d)

    def __rsub__(self, o):
        return Dual3(o - self.v, tuple(-p for p in self.d))

    def __mul__(self, o):
        if isinstance(o, Dual3):
            return Dual3(self.v * o.v, tuple(p * o.v + self.v * q for p, q in zip(self.d, o.d)))
        return Dual3(self.v * o, tuple(p * o for p in self.d))

    __rmul__ = __mul__

    def __truediv__(self, o):
        if isinstance(o, Dual3):
            _guard_nonzero(o.v, "division")
            inv = 1.0 / o.v
            val = self.v * inv
            return Dual3(val, tuple((p - val * q) * inv for p, q in zip(self.d, o.d)))
        _guard_nonzero(o, "division")
        return Dual3(self.v / o, tuple(p / o for p in self.d))

    def __rtruediv__(self, o):
        _guard_nonzero(self.v, "division")
        val = o / self.v
        return Dual3(val, tuple(-val * p / self.v for p in self.d))

    def __pow__(self, o):
        return power(self, o)

    def __rpow__(self, o):
        return power(o, self)

    @property
    def partials(self) -> tuple:
        return self.d


def primal(x):
    """Innermost value of a (possibly nested) dual."""
    while isinstance(x, Dual3):
        x = x.v
    return x


def zeros_like(x):
    if isinstance(x, Dual3):
        return Dual3.const(zeros_like(x.v))
    return np.zeros_like(np.asarray(x, dtype=float))


def ones_like(x):
    if isinstance(x, Dual3):
        return Dual3.const(ones_like(x.v))
    return np.ones_like(np.asarray(x, dtype=float))


def _guard_nonzero(x, what):
    if np.any(np.asarray(primal(x)) == 0):
        raise DomainError(f"{what} by zero")


def _log_raw(x):
    if np.any(np.asarray(x) <= 0):
        raise DomainError("log of non-positive argument")
    return np.log(x)


def _sqrt_raw(x):
    if np.any(np.asarray(x) < 0):
        raise DomainError("sqrt of negative argument")
    return np.sqrt(x)


def sqrt(x):
    if isinstance(x, Dual3):
        s = sqrt(x.v)
        if np.any(np.asarray(primal(s)) == 0):
            raise DomainError("sqrt is not differentiable at 0")
        return Dual3(s, tuple(p * 0.5 / s for p in x.d))
    return _sqrt_raw(x)


def sin(x):
    if isinstance(x, Dual3):
        return Dual3(sin(x.v), tuple(cos(x.v) * p for p in x.d))
    return np.sin(x)


def cos(x):
    if isinstance(x, Dual3):
        return Dual3(cos(x.v), tuple(-sin(x.v) * p for p in x.d))
    return np.cos(x)


def exp(x):
    if isinstance(x, Dual3):
        e = exp(x.v)
        return Dual3(e, tuple(e * p for p in x.d))
    return np.exp(x)


def log(x):
    if isinstance(x, Dual3):
        log(primal(x))  # domain check on the primal
        return Dual3(log(x.v), tuple(p / x.v for p in x.d))
    return _log_raw(x)


def _is_integer_const(e) -> bool:
    if isinstance(e, Dual3):
        return False
    e = np.asarray(e)
    return e.ndim == 0 and float(e) == round(float(e))


def power(base, expo):
    """base ** expo with the branch choice driven by the exponent.

    A constant exponent uses the power rule (negative bases allowed only for
    integer exponents); a dual exponent requires a positive base.
    """
    if not isinstance(expo, Dual3):
        c = float(np.asarray(expo)) if np.asarray(expo).ndim == 0 else np.asarray(expo)
        bp = np.asarray(primal(base))
        if not _is_integer_const(c) and np.any(bp < 0):
            raise DomainError("fractional power of a negative base")
        if np.any(bp == 0) and np.any(np.asarray(c) < 0):
            raise DomainError("negative power of zero")
        if isinstance(base, Dual3):
            if np.ndim(c) == 0 and c == 0:
                return Dual3.const(ones_like(base.v))
            lower = c * power(base.v, c - 1)
            return Dual3(power(base.v, c), tuple(lower * p for p in base.d))
        return np.power(np.asarray(base, dtype=float), c)
    # variable exponent: x^y = exp(y log x)
    return exp(expo * log(base))
