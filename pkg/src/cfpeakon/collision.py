"""Two-body collisions for d = 2: the invariant C_2, the limiting Lax matrix and
its reduction to a canonical form with a single simple pole."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import WrongDimension, ZeroTotalMass
from .lax import MatrixPoly2
from .model import ModelParams, PeakonState
from .poly import Poly

MASS_TOL = 1e-14
CANCEL_RTOL = 1e-9


@dataclass(frozen=True)
class Rational:
    """``num / den`` with ``den`` normalized to be monic."""

    num: Poly
    den: Poly

    def __post_init__(self):
        if self.den.is_zero():
            raise ZeroDivisionError("rational function with zero denominator")
        lead = self.den.coeffs[-1]
        if lead != 1:
            object.__setattr__(self, "num", self.num.scale(1 / lead))
            object.__setattr__(self, "den", self.den.scale(1 / lead))

    @classmethod
    def poly(cls, p: Poly) -> Rational:
        return cls(p, Poly([1.0]))

    def __call__(self, z):
        return self.num(z) / self.den(z)

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def __add__(self, other: Rational) -> Rational:
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        if self.den == other.den:
            return Rational(self.num + other.num, self.den)
        return Rational(self.num * other.den + other.num * self.den, self.den * other.den)

    def __neg__(self) -> Rational:
        return Rational(-self.num, self.den)

    def __sub__(self, other: Rational) -> Rational:
        return self + (-other)

    def __mul__(self, other) -> Rational:
        if not isinstance(other, Rational):
            return Rational(self.num * other, self.den)
        if self.is_zero() or other.is_zero():
            return Rational.poly(Poly(()))
        return Rational(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other: Rational) -> Rational:
        return Rational(self.num * other.den, self.den * other.num)

    def cancel(self, factor: Poly) -> Rational:
        """Divide out ``factor`` from numerator and denominator while both are divisible."""
        num, den = self.num, self.den
        rho = max(float(np.abs(factor.roots()).max(initial=0.0)), 1.0)
        while den.degree() >= factor.degree():
            qn, rn = num.divmod(factor)
            qd, rd = den.divmod(factor)
            if not (_negligible(rn, num, rho) and _negligible(rd, den, rho)) or qd.is_zero():
                break
            num, den = qn, qd
        return Rational(num, den)

    def poles(self) -> np.ndarray:
        return self.den.roots()

    def allclose(self, other: Rational, rtol: float = 1e-10) -> bool:
        return self.num.allclose(other.num, rtol) and self.den.allclose(other.den, rtol)

    def __repr__(self) -> str:
        return f"Rational({list(self.num.coeffs)!r} / {list(self.den.coeffs)!r})"


def _negligible(rem: Poly, ref: Poly, rho: float) -> bool:
    """Remainder small against the rounding scale of evaluating ``ref`` at radius ``rho``."""
    scale = sum(abs(c) * rho ** k for k, c in enumerate(ref.coeffs))
    return all(abs(c) <= CANCEL_RTOL * scale for c in rem.coeffs)


def _cancel_all(X, factor: Poly):
    return [[X[i][j].cancel(factor) for j in range(2)] for i in range(2)]


def _matmul(X, Y):
    return [[X[i][0] * Y[0][j] + X[i][1] * Y[1][j] for j in range(2)] for i in range(2)]


@dataclass(frozen=True)
class CollisionForm:
    """Canonical matrix ``A''`` with rational entries and one simple pole."""

    beta_minus: float
    beta_plus: float
    M: float
    C2: float
    pole_location: float
    entries: tuple

    def __call__(self, z) -> np.ndarray:
        return np.array([[self.entries[i][j](z) for j in range(2)] for i in range(2)])

    def trace(self, z):
        return self.entries[0][0](z) + self.entries[1][1](z)

    def det(self, z):
        e = self.entries
        return e[0][0](z) * e[1][1](z) - e[0][1](z) * e[1][0](z)

    def poles(self) -> np.ndarray:
        return np.unique(np.round(np.concatenate([e.poles() for row in self.entries for e in row]), 12))

    def allclose(self, other: CollisionForm, rtol: float = 1e-10) -> bool:
        return all(
            self.entries[i][j].allclose(other.entries[i][j], rtol) for i in range(2) for j in range(2)
        )


def _check_mass(M: float):
    if abs(M) < MASS_TOL:
        raise ZeroTotalMass("total mass vanishes; the collision conjugation is undefined")


def collision_limit_A(params: ModelParams, M: float, C2: float, x_star: float) -> MatrixPoly2:
    """Limit of ``A(z)`` as two peakons merge at ``x_star``.

    With ``q = z + C2/M`` the limit is
    ``[[beta_-(z^2 + zM + C2), beta_+ M e^{-2nu x*} q], [-beta_- M e^{2nu x*} q, beta_+(z^2 - zM - C2)]]``;
    both off-diagonal entries vanish at ``z = -C2/M``.
    """
    _check_mass(M)
    bm, bp, nu = params.beta_minus, params.beta_plus, params.nu
    q = Poly([C2 / M, 1.0])
    e = np.exp(2 * nu * x_star)
    return MatrixPoly2([
        [Poly([bm * C2, bm * M, bm]), q.scale(bp * M / e)],
        [q.scale(-bm * M * e), Poly([-bp * C2, -bp * M, bp])],
    ], "z")


def canonical_form(params: ModelParams, M: float, C2: float, x_star: float = 0.0) -> CollisionForm:
    """Reduce the collision limit to ``A''`` by explicit conjugation.

    First ``D = diag(1/q, q)`` gives ``D^-1 A D``, then the triangular gauge
    ``P = [[a, b], [0, d]]`` with ``a = 1``, ``d = -beta_- M e^{2nu x*}`` and
    ``b = beta_- M a q^2`` removes every trace of ``x*``. Common factors of
    ``q`` are cancelled at the end.
    """
    _check_mass(M)
    if params.beta_minus == 0:
        raise ValueError("beta_minus must be nonzero")
    L = collision_limit_A(params, M, C2, x_star)
    q = Poly([C2 / M, 1.0])
    one = Poly([1.0])
    zero = Rational.poly(Poly(()))
    Lr = [[Rational.poly(L[i, j]) for j in range(2)] for i in range(2)]
    D = [[Rational(one, q), zero], [zero, Rational.poly(q)]]
    D_inv = [[Rational.poly(q), zero], [zero, Rational(one, q)]]
    a = 1.0
    d = -params.beta_minus * M * np.exp(2 * params.nu * x_star)
    b = (q * q).scale(params.beta_minus * M * a)
    P = [[Rational.poly(Poly([a])), Rational.poly(b)], [zero, Rational.poly(Poly([d]))]]
    P_inv = [[Rational.poly(Poly([1 / a])), Rational.poly(b.scale(-1 / (a * d)))],
             [zero, Rational.poly(Poly([1 / d]))]]
    # cancel after every product so no intermediate carries spurious powers of q
    X = _cancel_all(_matmul(_cancel_all(_matmul(D_inv, Lr), q), D), q)
    A2 = _cancel_all(_matmul(_cancel_all(_matmul(P_inv, X), q), P), q)
    entries = tuple(tuple(row) for row in A2)
    return CollisionForm(params.beta_minus, params.beta_plus, M, C2, -C2 / M, entries)


def c2_invariant(state: PeakonState, params: ModelParams) -> float:
    """``m_1 m_2 (1 - e^{-2nu g})(beta_- - beta_+ e^{2nu g})`` with ``g = x_2 - x_1``."""
    if state.d != 2:
        raise WrongDimension(f"C2 is defined for d = 2, got d = {state.d}")
    g = state.gaps[0]
    nu = params.nu
    m1, m2 = state.m
    return float(m1 * m2 * -np.expm1(-2 * nu * g) * (params.beta_minus - params.beta_plus * np.exp(2 * nu * g)))
