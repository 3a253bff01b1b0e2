"""Spectral curve ``w^2 = P(z)`` of the Lax matrix, its branch data and the
Weyl function expanded at ``z = 0``."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import BranchAtOrigin, DegenerateCurve, ZeroDenominator
from .lax import SIGMA3, MatrixPoly2
from .model import ModelParams
from .poly import Poly, PowerSeries, series_sqrt

CLUSTER_RTOL = 1e-8
CLUSTER_ATOL = 1e-12
BRANCH_RTOL = 1e-12
DENOM_RTOL = 1e-10

__all__ = [
    "SIGMA3", "SpectralData", "WeylSeries", "curve_data", "trace_invariants",
    "weyl_series", "pade_defect",
]


@dataclass(frozen=True)
class SpectralData:
    """Trace polynomial, branch polynomial ``P = (Tr A)^2 / 4 - det(beta) z^{2d}``
    and its roots.

    ``multiplicities`` lists the cluster size of every branch point (1 for a
    simple root). ``genus`` counts odd-multiplicity roots, so a perfect-square
    ``P`` gives genus 0.
    """

    trace_poly: Poly
    det_beta: float
    P: Poly
    branch_points: np.ndarray
    genus: int
    d: int
    multiplicities: tuple = ()

    @property
    def degenerate(self) -> bool:
        return any(k > 1 for k in self.multiplicities)

    @property
    def C_d(self) -> float:
        """``Tr A(0)``."""
        return float(self.trace_poly.coeff(0))

    @property
    def M(self) -> float:
        return float(self.trace_poly.coeff(self.d - 1))

    @property
    def sheet(self) -> str:
        return "upper" if self.C_d > 0 else "lower"


def trace_invariants(A: MatrixPoly2) -> np.ndarray:
    """Coefficients of ``Tr A(z)``; entry ``i`` multiplies ``z**i``."""
    d = A.degree()
    return np.array([float(c) for c in A.trace().padded(d + 1)])


def _cluster(roots: np.ndarray) -> list[list[int]]:
    # relative, so that distinct roots near the origin stay apart; the floor
    # only merges roundoff-sized roots such as a double root at 0
    floor = CLUSTER_ATOL * max(float(np.abs(roots).max(initial=0.0)), 1.0)
    groups: list[list[int]] = []
    for i, r in enumerate(roots):
        for g in groups:
            r0 = roots[g[0]]
            if abs(r - r0) <= CLUSTER_RTOL * max(abs(r), abs(r0)) + floor:
                g.append(i)
                break
        else:
            groups.append([i])
    return groups


def curve_data(A: MatrixPoly2, params: ModelParams, strict: bool = True) -> SpectralData:
    """Branch data of the spectral curve of ``A``.

    ``P`` factors as ``(Tr A / 2 - s z^d)(Tr A / 2 + s z^d)`` with
    ``s = sqrt(det beta)``; each degree-``d`` factor is solved separately so
    that a perfect square (``beta_+ = 0``) gives exactly coincident roots.
    A repeated root raises :class:`DegenerateCurve` unless ``strict`` is
    false, in which case the result carries the multiplicities and a warning
    is issued.
    """
    d = A.degree()
    trace = A.trace()
    det_beta = params.det_beta
    half = trace.scale(0.5)
    P = half * half - Poly.monomial(det_beta, 2 * d)
    s = np.sqrt(complex(det_beta))
    zd = Poly.monomial(s, d)
    roots = np.concatenate([(half - zd).roots(), (half + zd).roots()])
    groups = _cluster(roots)
    mult = [0] * len(roots)
    for g in groups:
        for i in g:
            mult[i] = len(g)
    odd = sum(1 for g in groups if len(g) % 2)
    genus = max(odd // 2 - 1, 0)
    data = SpectralData(trace, det_beta, P, roots, genus, d, tuple(mult))
    if data.degenerate:
        msg = f"branch polynomial has repeated roots (multiplicities {sorted(set(mult))}); genus drops to {genus}"
        if strict:
            raise DegenerateCurve(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return data


@dataclass(frozen=True)
class WeylSeries:
    """Taylor coefficients of ``W = zeta_2 / zeta_1`` at ``z = 0`` on one sheet."""

    series: PowerSeries
    sheet: str
    order: int
    d: int
    M: float

    @property
    def coeffs(self) -> tuple:
        return self.series.coeffs


def _entry(A: MatrixPoly2, i: int, j: int, order: int) -> PowerSeries:
    return PowerSeries.from_poly(A[i, j], order)


def _checked_div(num: PowerSeries, den: PowerSeries, scale: float) -> PowerSeries:
    if abs(den[0]) < DENOM_RTOL * scale:
        raise ZeroDenominator(f"denominator vanishes at z = 0 ({den[0]!r})")
    return num / den


def _sheet_excess(spectral: SpectralData, order: int) -> PowerSeries:
    """``sqrt(P) - h`` on the sheet through ``h(0)``, where ``h = Tr A / 2``.

    Computed as ``h (sqrt(1 - u) - 1)`` with ``u = det(beta) z^{2d} / h^2``,
    so it is ``O(z^{2d})`` with no cancellation. The direct recurrence for
    ``sqrt(P)`` divides by ``|C_d|`` at every order and, near ``C_d = 0``,
    turns rounding in the low coefficients of ``P`` into geometric growth.
    """
    h = PowerSeries.from_poly(spectral.trace_poly.scale(0.5), order)
    zz = PowerSeries.from_poly(Poly.monomial(spectral.det_beta, 2 * spectral.d), order)
    one = PowerSeries.from_poly(Poly([1.0]), order)
    return h * (series_sqrt(one - zz / (h * h), 1) - one)


def weyl_series(A: MatrixPoly2, spectral: SpectralData, order: int, formula: int = 2,
                sign: int | None = None) -> WeylSeries:
    """Series of the Weyl function on the sheet through ``w = Tr A(0)``.

    ``w`` is the eigenvalue branch ``Tr A / 2 + sqrt(P)`` with the square root
    signed by ``sign(C_d)`` (override with ``sign`` for negative controls).
    ``formula`` picks the representation:

    1. ``(sqrt(P) - Tr(A sigma_3) / 2) / A_12``
    2. ``A_21 / (sqrt(P) + Tr(A sigma_3) / 2)``
    3. fixed point of ``W = (A_21 + A_22 W) / (A_11 + A_12 W)``

    Formula 2 is the default since its denominator at 0 is ``A_11(0)``, which
    stays nonzero at ``beta_+ = 0`` where ``A_12`` vanishes identically.
    """
    d = spectral.d
    scale = max(abs(c) for c in spectral.trace_poly.coeffs)
    C_d = spectral.C_d
    if abs(C_d) <= BRANCH_RTOL * scale:
        raise BranchAtOrigin("Tr A(0) = 0, the origin is a branch point")
    if sign is None:
        sign = 1 if C_d > 0 else -1
    a_scale = max(float(np.abs(c).max()) for c in A.coefficients())
    a11, a12 = _entry(A, 0, 0, order), _entry(A, 0, 1, order)
    a21, a22 = _entry(A, 1, 0, order), _entry(A, 1, 1, order)
    if formula == 3:
        if sign != (1 if C_d > 0 else -1):
            raise ValueError("the fixed-point formula only reaches the Tr A(0) sheet")
        W = _checked_div(a21, a11, a_scale)
        # each sweep gains 2d orders: the contraction factor is O(z^{2d})
        for _ in range(order // (2 * d) + 1):
            W = _checked_div(a21 + a22 * W, a11 + a12 * W, a_scale)
    else:
        # with root = +-(h + excess): root -+ (a11 - a22) / 2 regrouped so
        # that h = (a11 + a22) / 2 never cancels against a11 or a22
        excess = _sheet_excess(spectral, order)
        if sign * C_d > 0:
            num1, den2 = a22 + excess, a11 + excess
        else:
            num1, den2 = (a11 + excess) * -1.0, (a22 + excess) * -1.0
        if formula == 1:
            W = _checked_div(num1, a12, a_scale)
        elif formula == 2:
            W = _checked_div(a21, den2, a_scale)
        else:
            raise ValueError(f"unknown Weyl formula {formula!r}")
    W = PowerSeries([complex(c).real if isinstance(c, complex) else float(c) for c in W.coeffs], W.order)
    return WeylSeries(W, "upper" if sign > 0 else "lower", W.order, d, spectral.M)


def pade_defect(A: MatrixPoly2, W: WeylSeries) -> np.ndarray:
    """Scaled coefficients of ``W - A_21 / A_11`` through ``W.order``.

    The scale is the largest coefficient magnitude of the two series.
    """
    ratio = _entry(A, 1, 0, W.order) / _entry(A, 0, 0, W.order)
    diff = np.array(W.series.coeffs, dtype=float) - np.array(ratio.coeffs, dtype=float)
    scale = max(np.abs(W.series.coeffs).max(), np.abs(ratio.coeffs).max(), 1e-300)
    return diff / scale
