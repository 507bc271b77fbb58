"""Exact arithmetic in the field Q(sqrt 2).

Neumann vertex matrices are rational and the T-junction centre matrix has
entries in {0, 1/2, +-sqrt(2)/2}, so path amplitudes built from them stay in
Q(sqrt 2). Keeping them exact lets interference sums be compared with the
closed-form family coefficients without any rounding.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational

SQRT2 = math.sqrt(2.0)


class Surd:
    """A number ``a + b*sqrt(2)`` with rational ``a`` and ``b``."""

    __slots__ = ("a", "b")

    def __init__(self, a=0, b=0):
        self.a = Fraction(a)
        self.b = Fraction(b)

    @staticmethod
    def _coerce(other):
        if isinstance(other, Surd):
            return other
        if isinstance(other, (int, Rational)):
            return Surd(other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Surd(self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Surd(self.a - o.a, self.b - o.b)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __neg__(self):
        return Surd(-self.a, -self.b)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Surd(self.a * o.a + 2 * self.b * o.b, self.a * o.b + self.b * o.a)

    __rmul__ = __mul__

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self.a == o.a and self.b == o.b

    def __hash__(self):
        if self.b == 0:
            return hash(self.a)
        return hash((self.a, self.b))

    def __float__(self):
        return float(self.a) + float(self.b) * SQRT2

    def __complex__(self):
        return complex(float(self))

    def __repr__(self):
        if self.b == 0:
            return f"Surd({self.a})"
        return f"Surd({self.a}, {self.b})"

    def conjugate(self):
        # real field: complex conjugation is the identity
        return self

    @property
    def is_rational(self) -> bool:
        return self.b == 0

    def to_fraction(self) -> Fraction:
        if self.b != 0:
            raise ValueError(f"{self!r} is irrational")
        return self.a


def recognize(x: float, max_denominator: int = 4096, tol: float = 1e-13) -> Surd | None:
    """Return the exact value of ``x`` if it is ``p/q`` or ``(p/q)*sqrt(2)``.

    Only small denominators are tried; ``None`` means the float could not be
    identified and callers should fall back to floating point.
    """
    if not math.isfinite(x):
        return None
    r = Fraction(x).limit_denominator(max_denominator)
    if abs(float(r) - x) <= tol:
        return Surd(r)
    r = Fraction(x / SQRT2).limit_denominator(max_denominator)
    if abs(float(r) * SQRT2 - x) <= tol:
        return Surd(0, r)
    return None


def abs2(x):
    """Squared modulus, exact for Surd/Fraction inputs."""
    if isinstance(x, (Surd, int, Rational)):
        return x * x
    return abs(x) ** 2
