"""Transition matrix T(lambda), Lax matrix A(z), its partner B(z) and the
Lax-equation residual."""
from __future__ import annotations

from functools import lru_cache
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .exceptions import DegreeOverflow
from .model import ModelParams, PeakonState, vector_field
from .poly import Poly

SIGMA3 = np.diag([1.0, -1.0])


def _as_array(rows) -> np.ndarray:
    # keep longdouble/complex scalars; plain ints become float
    arr = np.array(rows)
    if arr.dtype.kind in "iub":
        arr = arr.astype(float)
    return arr


class MatrixPoly2:
    """2x2 matrix with polynomial entries in a single variable.

    ``variable`` is ``"lambda"`` for transition matrices and ``"z"`` for
    Lax matrices (``z = 1/lambda``).
    """

    __slots__ = ("entries", "variable")

    def __init__(self, entries: Sequence[Sequence[Poly]], variable: str = "z"):
        if variable not in ("lambda", "z"):
            raise ValueError(f"unknown variable tag {variable!r}")
        self.entries = tuple(tuple(Poly(e.coeffs) if isinstance(e, Poly) else Poly(e) for e in row) for row in entries)
        if len(self.entries) != 2 or any(len(row) != 2 for row in self.entries):
            raise ValueError("MatrixPoly2 needs a 2x2 array of entries")
        self.variable = variable

    @classmethod
    def from_coefficients(cls, coeffs: Sequence, variable: str = "z") -> MatrixPoly2:
        """Build from a list of 2x2 arrays, ``coeffs[k]`` multiplying ``var**k``."""
        coeffs = [np.asarray(c) for c in coeffs]
        entries = [[Poly([c[i, j] for c in coeffs]) for j in range(2)] for i in range(2)]
        return cls(entries, variable)

    @classmethod
    def identity(cls, variable: str = "z") -> MatrixPoly2:
        one, zero = Poly([1.0]), Poly(())
        return cls([[one, zero], [zero, one]], variable)

    def __getitem__(self, ij) -> Poly:
        i, j = ij
        return self.entries[i][j]

    def degree(self) -> int:
        return max(e.degree() for row in self.entries for e in row)

    def coefficient(self, k: int) -> np.ndarray:
        return _as_array([[self.entries[i][j].coeff(k) for j in range(2)] for i in range(2)])

    def coefficients(self) -> list[np.ndarray]:
        return [self.coefficient(k) for k in range(self.degree() + 1)]

    def __call__(self, value) -> np.ndarray:
        return _as_array([[self.entries[i][j](value) for j in range(2)] for i in range(2)])

    def _check(self, other: MatrixPoly2):
        if other.variable != self.variable:
            raise ValueError(f"variable mismatch: {self.variable} vs {other.variable}")

    def __add__(self, other: MatrixPoly2) -> MatrixPoly2:
        self._check(other)
        return MatrixPoly2([[self[i, j] + other[i, j] for j in range(2)] for i in range(2)], self.variable)

    def __sub__(self, other: MatrixPoly2) -> MatrixPoly2:
        self._check(other)
        return MatrixPoly2([[self[i, j] - other[i, j] for j in range(2)] for i in range(2)], self.variable)

    def __matmul__(self, other: MatrixPoly2) -> MatrixPoly2:
        self._check(other)
        return MatrixPoly2(
            [[self[i, 0] * other[0, j] + self[i, 1] * other[1, j] for j in range(2)] for i in range(2)],
            self.variable,
        )

    def scale_columns(self, c0, c1) -> MatrixPoly2:
        """Right multiplication by ``diag(c0, c1)``."""
        return MatrixPoly2([[self[i, 0].scale(c0), self[i, 1].scale(c1)] for i in range(2)], self.variable)

    def trace(self) -> Poly:
        return self[0, 0] + self[1, 1]

    def det(self) -> Poly:
        return self[0, 0] * self[1, 1] - self[0, 1] * self[1, 0]

    def commutator(self, other: MatrixPoly2) -> MatrixPoly2:
        return self @ other - other @ self

    def allclose(self, other: MatrixPoly2, rtol: float = 1e-12) -> bool:
        """Coefficient-wise comparison relative to the largest coefficient."""
        self._check(other)
        n = max(self.degree(), other.degree()) + 1
        a = np.array([self.coefficient(k) for k in range(n)])
        b = np.array([other.coefficient(k) for k in range(n)])
        scale = max(np.abs(a).max(initial=0), np.abs(b).max(initial=0))
        return bool(np.all(np.abs(a - b) <= rtol * scale))

    def __repr__(self) -> str:
        return f"MatrixPoly2({[[e.coeffs for e in row] for row in self.entries]!r}, variable={self.variable!r})"


def _transfer(x_j: float, m_j: float, nu: float) -> MatrixPoly2:
    X = np.array([[1.0, np.exp(-2 * nu * x_j)], [-np.exp(2 * nu * x_j), -1.0]])
    return MatrixPoly2.from_coefficients([np.eye(2), m_j * X], "lambda")


def build_T(state: PeakonState, params: ModelParams) -> MatrixPoly2:
    """``T = T_d ... T_1`` with ``T_j = I + lambda m_j X_j``."""
    T = MatrixPoly2.identity("lambda")
    for x_j, m_j in zip(state.x, state.m):
        T = _transfer(x_j, m_j, params.nu) @ T
    return T


def build_A(state: PeakonState, params: ModelParams, method: str = "product") -> MatrixPoly2:
    """Lax matrix ``A(z) = z^d T(1/z) beta``.

    ``method="product"`` multiplies out the transfer matrices and reverses
    coefficients; ``method="closed_form"`` sums over increasing multi-indices.
    """
    if method == "product":
        return _a_from_product(state, params)
    if method == "closed_form":
        return _a_closed_form(state, params)
    raise ValueError(f"unknown method {method!r}")


def _a_from_product(state: PeakonState, params: ModelParams) -> MatrixPoly2:
    d = state.d
    T = build_T(state, params)
    if T.degree() > d:
        raise DegreeOverflow(f"T has degree {T.degree()} > d = {d}")
    Az = MatrixPoly2([[T[i, j].reversed(d) for j in range(2)] for i in range(2)], "z")
    return Az.scale_columns(params.beta_minus, params.beta_plus)


def _a_closed_form(state: PeakonState, params: ModelParams) -> MatrixPoly2:
    d, nu = state.d, params.nu
    bm, bp = params.beta_minus, params.beta_plus
    x, m = state.x, state.m
    D = state.distances()
    # one_minus[i, j] = 1 - exp(-2 nu (x_j - x_i)) for i < j
    one_minus = -np.expm1(-2 * nu * D)
    dtype = state.dtype
    coeffs = [np.zeros((2, 2), dtype=dtype) for _ in range(d + 1)]
    coeffs[d] = np.diag(np.array([bm, bp], dtype=dtype))
    for k in range(1, d + 1):
        acc = np.zeros((2, 2), dtype=dtype)
        for I in combinations(range(d), k):
            first, last = I[0], I[-1]
            weight = np.prod(m[list(I)])
            for a, b in zip(I, I[1:]):
                weight *= one_minus[a, b]
            acc += weight * np.array([
                [bm, bp * np.exp(-2 * nu * x[first])],
                [-bm * np.exp(2 * nu * x[last]), -bp * np.exp(2 * nu * D[first, last])],
            ])
        coeffs[d - k] = acc
    return MatrixPoly2.from_coefficients(coeffs, "z")


def build_B(A: MatrixPoly2, params: ModelParams, state: PeakonState | None = None,
            gauge: str = "polynomial") -> MatrixPoly2:
    """Lax partner ``B(z)`` of degree 1 for ``A(z)``.

    ``gauge="polynomial"`` returns ``(A(z) / z^(d-1))^+``;
    ``gauge="symmetric"`` subtracts ``((beta_- + beta_+) z + M) / 2`` times the
    identity, giving diagonal ``+-(z/2 + (beta_- + beta_+) M / 2)``.
    If ``params.C`` differs from the drift that makes the polynomial part exact
    (see :func:`cfpeakon.model.lax_drift`) a ``sigma_3`` correction is added so
    that ``dA/dt = [B, A]`` holds for the actual flow.
    """
    if A.variable != "z":
        raise ValueError("build_B expects A in the z variable")
    d = A.degree()
    if d < 1:
        raise ValueError("A must have degree at least 1")
    top = A.coefficient(d)
    sub = A.coefficient(d - 1)
    M = np.sum(state.m) if state is not None else np.trace(sub)
    correction = params.nu * params.C - (params.beta_minus + params.beta_plus) * M / 2
    const = sub + correction * SIGMA3
    if gauge == "symmetric":
        const = const - M / 2 * np.eye(2)
        top = top - (params.beta_minus + params.beta_plus) / 2 * np.eye(2)
    elif gauge != "polynomial":
        raise ValueError(f"unknown gauge {gauge!r}")
    return MatrixPoly2.from_coefficients([const, top], "z")


DEFAULT_Z_SAMPLES = (-1.7, -0.6, 0.35, 1.1, 2.3)


def lax_residual(state: PeakonState, params: ModelParams, z_samples: Iterable[float] = DEFAULT_Z_SAMPLES,
                 h: float = 1e-5, method: str = "product", dtype=None) -> float:
    """Scaled max-norm of ``dA/dt - [B, A]`` over ``z_samples``.

    ``dA/dt`` is the central difference of :func:`build_A` along the vector
    field with step ``h``. Each sample is scaled by ``|B| |A|`` (max norms),
    floored at 1. Pass ``dtype=np.longdouble`` to push the roundoff floor of
    the difference quotient below the truncation error at small ``h``.
    """
    if dtype is not None:
        state = PeakonState(state.x, state.m, state.t, strict=False, dtype=dtype)
        h = dtype(h)
    xdot, mdot = vector_field(state, params)
    fwd = PeakonState(state.x + h * xdot, state.m + h * mdot, strict=False, dtype=state.dtype)
    bwd = PeakonState(state.x - h * xdot, state.m - h * mdot, strict=False, dtype=state.dtype)
    A = build_A(state, params, method)
    A_fwd = build_A(fwd, params, method)
    A_bwd = build_A(bwd, params, method)
    B = build_B(A, params, state)
    worst = 0.0
    for z in z_samples:
        if dtype is not None:
            z = dtype(z)
        Az, Bz = A(z), B(z)
        dA = (A_fwd(z) - A_bwd(z)) / (2 * h)
        res = np.abs(dA - (Bz @ Az - Az @ Bz)).max()
        scale = max(np.abs(Az).max() * np.abs(Bz).max(), 1.0)
        worst = max(worst, float(res / scale))
    return float(worst)


def trace_coefficients(state: PeakonState, params: ModelParams) -> np.ndarray:
    """Coefficients of ``Tr A(z)`` (index = power of ``z``) from the closed form.

    The ``z^(d-k)`` coefficient is the sum over ``|I| = k`` of
    ``f_I m_I (beta_- - beta_+ e^{2nu(x_last - x_first)})``. Products of
    ``1 - e^{-2nu l}`` use ``expm1`` on the state's gaps, so the values keep
    relative accuracy as two particles approach.
    """
    d, nu = state.d, params.nu
    bm, bp = params.beta_minus, params.beta_plus
    m = state.m
    D = state.distances()
    one_minus = -np.expm1(-2 * nu * D)
    out = np.zeros(d + 1)
    out[d] = bm + bp
    for k, idx in enumerate(_index_sets(d), start=1):
        weight = np.prod(m[idx], axis=1)
        if k > 1:
            weight = weight * np.prod(one_minus[idx[:, :-1], idx[:, 1:]], axis=1)
        out[d - k] = np.sum(weight * (bm - bp * np.exp(2 * nu * D[idx[:, 0], idx[:, -1]])))
    return out


@lru_cache(maxsize=None)
def _index_sets(d: int) -> tuple:
    """Increasing multi-indices of ``range(d)``, one ``(count, k)`` array per size ``k``."""
    return tuple(np.array(list(combinations(range(d), k))) for k in range(1, d + 1))
