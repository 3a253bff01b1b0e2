"""Univariate polynomials and truncated power series.

Both types store plain Python sequences of scalars in ascending powers, so the
same code runs on floats (the default), complex numbers, ``fractions.Fraction``
(exact oracles in the test suite) or ``mpmath.mpf`` (extended precision).
"""
from __future__ import annotations

import cmath
import math
from fractions import Fraction
from numbers import Number
from typing import Iterable, Sequence

import mpmath
import numpy as np

from .exceptions import BranchPointAtOrigin, ZeroConstantTerm

ZERO_DEGREE = -1
TRIM_RTOL = 1e-13

_INEXACT = (float, complex, np.floating, np.complexfloating)


def _is_scalar(value) -> bool:
    return isinstance(value, (Number, mpmath.mpf, mpmath.mpc))


def _magnitude(coeffs: Iterable) -> float:
    return max((abs(c) for c in coeffs), default=0)


def _canonical(coeffs: Sequence, scale) -> tuple:
    """Drop trailing coefficients that are zero relative to ``scale``.

    Floating coefficients below ``TRIM_RTOL * scale`` count as zero; exact
    scalars (int, Fraction, mpf) are only trimmed when exactly zero.
    """
    coeffs = list(coeffs)
    while coeffs:
        c = coeffs[-1]
        if isinstance(c, _INEXACT):
            if abs(c) > TRIM_RTOL * scale:
                break
        elif c != 0:
            break
        coeffs.pop()
    return tuple(coeffs)


def sqrt(value):
    """Principal square root that picks the right backend for the scalar."""
    if isinstance(value, (mpmath.mpf, mpmath.mpc)):
        return mpmath.sqrt(value)
    if isinstance(value, (complex, np.complexfloating)):
        return cmath.sqrt(value)
    if value < 0:
        return cmath.sqrt(value)
    if isinstance(value, np.floating):
        return np.sqrt(value)
    return math.sqrt(value)


class Poly:
    """Immutable polynomial ``c[0] + c[1] z + ... + c[n] z^n``."""

    __slots__ = ("_coeffs",)

    def __init__(self, coeffs: Iterable = (), *, canonical: bool = True):
        coeffs = tuple(coeffs)
        if canonical:
            coeffs = _canonical(coeffs, _magnitude(coeffs))
        self._coeffs = coeffs

    @classmethod
    def monomial(cls, coeff, power: int) -> Poly:
        return cls((0,) * power + (coeff,))

    @classmethod
    def constant(cls, value) -> Poly:
        return cls((value,))

    @property
    def coeffs(self) -> tuple:
        return self._coeffs

    def degree(self) -> int:
        return len(self._coeffs) - 1 if self._coeffs else ZERO_DEGREE

    def is_zero(self) -> bool:
        return not self._coeffs

    def coeff(self, k: int):
        if 0 <= k < len(self._coeffs):
            return self._coeffs[k]
        return 0

    def padded(self, length: int) -> list:
        return [self.coeff(k) for k in range(length)]

    def __call__(self, z):
        acc = 0
        for c in reversed(self._coeffs):
            acc = acc * z + c
        return acc

    def __repr__(self) -> str:
        return f"Poly({list(self._coeffs)!r})"

    def __eq__(self, other) -> bool:
        if _is_scalar(other):
            other = Poly.constant(other)
        if not isinstance(other, Poly):
            return NotImplemented
        return self._coeffs == other._coeffs

    def __hash__(self) -> int:
        return hash(self._coeffs)

    def allclose(self, other: Poly, rtol: float = 1e-12, atol: float = 0.0) -> bool:
        n = max(len(self._coeffs), len(other._coeffs))
        a = np.array(self.padded(n), dtype=complex)
        b = np.array(other.padded(n), dtype=complex)
        scale = max(np.abs(a).max(initial=0), np.abs(b).max(initial=0))
        return bool(np.all(np.abs(a - b) <= atol + rtol * scale))

    # arithmetic -----------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Poly):
            return other
        if _is_scalar(other):
            return Poly.constant(other)
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return poly_arith(self, other, "add")

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return poly_arith(self, other, "sub")

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return poly_arith(other, self, "sub")

    def __mul__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return poly_arith(self, other, "mul")

    __rmul__ = __mul__

    def __neg__(self) -> Poly:
        return Poly([-c for c in self._coeffs], canonical=False)

    def __pow__(self, n: int) -> Poly:
        out = Poly.constant(1)
        for _ in range(n):
            out = out * self
        return out

    def scale(self, factor) -> Poly:
        return Poly([factor * c for c in self._coeffs])

    def shift(self, k: int) -> Poly:
        """Multiply by ``z**k``."""
        if self.is_zero():
            return self
        return Poly((0,) * k + self._coeffs, canonical=False)

    def reversed(self, n: int) -> Poly:
        """Return ``z**n * p(1/z)``; requires ``degree() <= n``."""
        if self.degree() > n:
            raise ValueError(f"degree {self.degree()} exceeds reversal length {n}")
        return Poly(reversed(self.padded(n + 1)))

    def derivative(self) -> Poly:
        return Poly([k * c for k, c in enumerate(self._coeffs)][1:])

    def divmod(self, divisor: Poly) -> tuple[Poly, Poly]:
        """Polynomial long division; returns ``(quotient, remainder)``."""
        if divisor.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self._coeffs)
        dv = divisor.coeffs
        n = len(dv) - 1
        if len(rem) - 1 < n:
            return Poly(()), self
        quo = [0] * (len(rem) - n)
        for k in range(len(rem) - 1 - n, -1, -1):
            q = rem[k + n] / dv[n]
            quo[k] = q
            for j in range(n + 1):
                rem[k + j] = rem[k + j] - q * dv[j]
        scale = max(_magnitude(self._coeffs), _magnitude(dv))
        return Poly(quo), Poly(_canonical(rem[:n], scale), canonical=False)

    def roots(self) -> np.ndarray:
        """Roots by companion-matrix eigenvalues (numpy), one Newton polish step."""
        if self.degree() < 1:
            return np.array([], dtype=complex)
        coeffs = np.array(self._coeffs, dtype=complex)
        roots = np.roots(coeffs[::-1]).astype(complex)
        dp = self.derivative()
        polished = []
        for r in roots:
            d = complex(dp(r))
            if d != 0:
                r = r - complex(self(r)) / d
            polished.append(r)
        return np.array(polished)


def poly_arith(a: Poly, b: Poly, op: str) -> Poly:
    """Coefficient arithmetic ``a op b`` for ``op`` in ``{"add", "sub", "mul"}``."""
    ca, cb = a.coeffs, b.coeffs
    scale = max(_magnitude(ca), _magnitude(cb))
    if op in ("add", "sub"):
        n = max(len(ca), len(cb))
        sign = 1 if op == "add" else -1
        out = [a.coeff(k) + sign * b.coeff(k) for k in range(n)]
        return Poly(_canonical(out, scale), canonical=False)
    if op == "mul":
        if not ca or not cb:
            return Poly(())
        out = [0] * (len(ca) + len(cb) - 1)
        for i, x in enumerate(ca):
            for j, y in enumerate(cb):
                out[i + j] = out[i + j] + x * y
        return Poly(_canonical(out, scale * scale), canonical=False)
    raise ValueError(f"unknown polynomial operation {op!r}")


class PowerSeries:
    """Truncated Taylor series ``sum c[k] z^k + O(z^order)``."""

    __slots__ = ("_coeffs",)

    def __init__(self, coeffs: Iterable, order: int | None = None):
        coeffs = list(coeffs)
        if order is None:
            order = len(coeffs)
        if order < 1:
            raise ValueError("power series order must be at least 1")
        coeffs = coeffs[:order] + [0] * (order - len(coeffs))
        self._coeffs = tuple(coeffs)

    @classmethod
    def from_poly(cls, p: Poly, order: int) -> PowerSeries:
        return cls(p.padded(order), order)

    @property
    def coeffs(self) -> tuple:
        return self._coeffs

    @property
    def order(self) -> int:
        return len(self._coeffs)

    def __getitem__(self, k):
        return self._coeffs[k]

    def __len__(self) -> int:
        return len(self._coeffs)

    def __repr__(self) -> str:
        return f"PowerSeries({list(self._coeffs)!r}, order={self.order})"

    def __call__(self, z):
        return Poly(self._coeffs, canonical=False)(z)

    def truncate(self, order: int) -> PowerSeries:
        return PowerSeries(self._coeffs[:order], min(order, self.order))

    def _coerce(self, other):
        if isinstance(other, PowerSeries):
            return other
        if isinstance(other, Poly):
            return PowerSeries.from_poly(other, self.order)
        if _is_scalar(other):
            return PowerSeries([other], self.order)
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        n = min(self.order, other.order)
        return PowerSeries([self[k] + other[k] for k in range(n)], n)

    __radd__ = __add__

    def __neg__(self) -> PowerSeries:
        return PowerSeries([-c for c in self._coeffs], self.order)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other - self

    def __mul__(self, other):
        if _is_scalar(other):
            return PowerSeries([other * c for c in self._coeffs], self.order)
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        n = min(self.order, other.order)
        out = []
        for k in range(n):
            acc = 0
            for j in range(k + 1):
                acc = acc + self[j] * other[k - j]
            out.append(acc)
        return PowerSeries(out, n)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if _is_scalar(other):
            return PowerSeries([c / other for c in self._coeffs], self.order)
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return series_div(self, other)

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return series_div(other, self)

    def sqrt(self, sign: int = 1) -> PowerSeries:
        return series_sqrt(self, sign)

    def allclose(self, other: PowerSeries, rtol: float = 1e-12, atol: float = 0.0) -> bool:
        n = min(self.order, other.order)
        a = np.array(self._coeffs[:n], dtype=complex)
        b = np.array(other.coeffs[:n], dtype=complex)
        scale = max(np.abs(a).max(initial=0), np.abs(b).max(initial=0))
        return bool(np.all(np.abs(a - b) <= atol + rtol * scale))


def series_div(num: PowerSeries, den: PowerSeries) -> PowerSeries:
    """Quotient ``q`` with ``q * den == num`` through the common order."""
    n = min(num.order, den.order)
    d0 = den[0]
    if d0 == 0:
        raise ZeroConstantTerm("denominator series has zero constant term")
    q = []
    for k in range(n):
        acc = num[k]
        for j in range(1, k + 1):
            acc = acc - den[j] * q[k - j]
        q.append(acc / d0)
    return PowerSeries(q, n)


def series_sqrt(p: PowerSeries, sign: int = 1) -> PowerSeries:
    """Branch ``s`` of the square root with ``s(0) = sign * sqrt(p(0))``."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    p0 = p[0]
    if p0 == 0:
        raise BranchPointAtOrigin("square root of a series vanishing at the origin")
    if isinstance(p0, Fraction):
        p0 = float(p0)
    s = [sign * sqrt(p0)]
    two_s0 = 2 * s[0]
    for k in range(1, p.order):
        acc = p[k]
        for j in range(1, k):
            acc = acc - s[j] * s[k - j]
        s.append(acc / two_s0)
    return PowerSeries(s, p.order)
