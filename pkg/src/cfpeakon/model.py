"""Parameters, peakon states, the two-exponential Green's function and the
peakon vector field."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class ModelParams:
    """Fixed parameters of one run.

    ``beta_minus - beta_plus`` must equal 1. ``C`` is the constant subtracted
    from the peakon potential.
    """

    nu: float
    beta_plus: float
    beta_minus: float
    C: float
    d: int

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError(f"nu must be positive, got {self.nu}")
        if abs(self.beta_minus - self.beta_plus - 1) > 1e-12:
            raise ValueError(
                f"beta_minus - beta_plus must be 1, got {self.beta_minus - self.beta_plus}"
            )
        if self.d < 1:
            raise ValueError(f"particle count must be positive, got {self.d}")

    @classmethod
    def for_state(cls, state: PeakonState, nu: float, beta_plus: float, C: float | None = None) -> ModelParams:
        """Parameters paired with ``state``; ``C`` defaults to :func:`lax_drift`."""
        beta_minus = beta_plus + 1
        if C is None:
            C = lax_drift(nu, beta_plus, beta_minus, float(np.sum(state.m)))
        return cls(nu=nu, beta_plus=beta_plus, beta_minus=beta_minus, C=C, d=state.d)

    @property
    def det_beta(self) -> float:
        return self.beta_minus * self.beta_plus

    def replace(self, **changes) -> ModelParams:
        fields = dict(nu=self.nu, beta_plus=self.beta_plus, beta_minus=self.beta_minus, C=self.C, d=self.d)
        fields.update(changes)
        return ModelParams(**fields)


def lax_drift(nu: float, beta_plus: float, beta_minus: float, M: float) -> float:
    """The drift ``C = (beta_- + beta_+) M / (2 nu)``.

    With this choice the polynomial part of ``A(z) / z**(d-1)`` is an exact
    Lax partner for ``A``; any other ``C`` needs a ``sigma_3`` correction.
    """
    return (beta_minus + beta_plus) * M / (2 * nu)


class PeakonState:
    """Positions ``x`` (strictly increasing) and nonzero masses ``m`` at time ``t``.

    Inputs are sorted by position; ``reordered`` records whether that changed
    the labelling. ``gaps`` may be given explicitly (the integrator carries
    neighbour gaps as independent variables so they keep relative precision
    near a collision); otherwise they are ``diff(x)``.

    ``strict=False`` skips the ordering and nonzero-mass checks, for
    degenerate configurations used in limits and tests. ``dtype`` may be
    ``np.longdouble`` for extended-precision evaluation.
    """

    __slots__ = ("x", "m", "t", "reordered", "_gaps")

    def __init__(self, x, m, t: float = 0.0, *, gaps=None, strict: bool = True, dtype=float):
        x = np.array(x, dtype=dtype).ravel()
        m = np.array(m, dtype=dtype).ravel()
        if x.shape != m.shape or x.size == 0:
            raise ValueError("x and m must be non-empty and of equal length")
        order = np.argsort(x, kind="stable")
        reordered = bool(np.any(order != np.arange(x.size)))
        if reordered:
            if gaps is not None:
                raise ValueError("explicit gaps require already ordered positions")
            x, m = x[order], m[order]
        if gaps is not None:
            gaps = np.array(gaps, dtype=dtype).ravel()
            if gaps.size != x.size - 1:
                raise ValueError("need exactly d-1 gaps")
        if strict:
            g = np.diff(x) if gaps is None else gaps
            if np.any(g <= 0):
                raise ValueError("positions must be strictly increasing")
            if np.any(m == 0):
                raise ValueError("masses must be nonzero")
        for arr in (x, m):
            arr.flags.writeable = False
        if gaps is not None:
            gaps.flags.writeable = False
        self.x = x
        self.m = m
        self.t = float(t)
        self.reordered = reordered
        self._gaps = gaps

    @property
    def d(self) -> int:
        return self.x.size

    @property
    def gaps(self) -> np.ndarray:
        return np.diff(self.x) if self._gaps is None else self._gaps

    @property
    def M(self) -> float:
        return float(np.sum(self.m))

    @property
    def dtype(self):
        return self.x.dtype

    def distances(self) -> np.ndarray:
        """Matrix ``D[i, j] = x_j - x_i`` built from summed gaps."""
        if self._gaps is None:
            return distance_matrix(np.diff(self.x))
        return distance_matrix(self._gaps)

    def same_sign(self) -> bool:
        return bool(np.all(self.m > 0) or np.all(self.m < 0))

    def __repr__(self) -> str:
        return f"PeakonState(t={self.t!r}, x={self.x.tolist()!r}, m={self.m.tolist()!r})"


def distance_matrix(gaps: np.ndarray) -> np.ndarray:
    """Antisymmetric ``D[i, j] = x_j - x_i`` from neighbour gaps.

    Each entry is a partial sum of gaps, so ``D[i, i+1]`` is the gap itself
    rather than a difference of nearly equal positions.
    """
    n = gaps.size
    D = np.zeros((n + 1, n + 1), dtype=gaps.dtype)
    if n:
        mask = _upper_mask(n)
        D[:-1, 1:] = np.cumsum(gaps * mask, axis=1) * mask
    return D - D.T


@lru_cache(maxsize=None)
def _upper_mask(n: int) -> np.ndarray:
    return np.triu(np.ones((n, n)))


@lru_cache(maxsize=None)
def _gap_indices(d: int):
    J = np.arange(d - 1)[:, None]
    K = np.arange(d)[None, :]
    left = K <= J
    rows = np.where(left, K, J + 1)
    cols = np.where(left, J, K)
    return rows, cols, np.where(left, 1.0, -1.0)


@dataclass(frozen=True)
class Asymptotics:
    """Total mass and the exponentially weighted masses ``M_+``, ``M_-``."""

    M: float
    M_plus: float
    M_minus: float


def asymptotics(state: PeakonState, params: ModelParams) -> Asymptotics:
    w = 2 * params.nu * state.x
    return Asymptotics(
        M=state.M,
        M_plus=float(np.sum(state.m * np.exp(w))),
        M_minus=float(np.sum(state.m * np.exp(-w))),
    )


def green(x, params: ModelParams):
    """``beta_-/(2nu) e^{-2nu|x|} + beta_+/(2nu) e^{2nu|x|}``."""
    s = 2 * params.nu * np.abs(x)
    return (params.beta_minus * np.exp(-s) + params.beta_plus * np.exp(s)) / (2 * params.nu)


def green_slope(x, params: ModelParams):
    """Derivative of :func:`green`, averaged to 0 at the kink ``x = 0``."""
    s = 2 * params.nu * np.abs(x)
    return np.sign(x) * (params.beta_plus * np.exp(s) - params.beta_minus * np.exp(-s))


def potential(state: PeakonState, params: ModelParams, x: float) -> tuple[float, float]:
    """Return ``(u(x), <u_x>(x))``; the derivative is the mean of one-sided limits."""
    r = x - state.x
    u = float(np.sum(state.m * green(r, params))) - params.C
    ux = float(np.sum(state.m * green_slope(r, params)))
    return u, ux


def vector_field(state: PeakonState, params: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """``xdot_j = u(x_j)``, ``mdot_j = -m_j <u_x>(x_j)``."""
    return field_from_distances(state.distances(), state.m, params)


def field_from_distances(D: np.ndarray, m: np.ndarray, params: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """:func:`vector_field` on a precomputed distance matrix ``D[j, k] = x_k - x_j``."""
    xdot = green(D, params) @ m - params.C
    mdot = -m * (green_slope(-D, params) @ m)
    return xdot, mdot


def gap_velocities(state: PeakonState, params: ModelParams) -> np.ndarray:
    """Time derivatives of the neighbour gaps, ``u(x_{j+1}) - u(x_j)``.

    Evaluated as differences of Green's functions with ``expm1`` so that the
    result keeps full relative accuracy when a gap is tiny.
    """
    return gap_velocities_from(state.distances(), state.gaps, state.m, params)


def gap_velocities_from(D: np.ndarray, gaps: np.ndarray, m: np.ndarray, params: ModelParams) -> np.ndarray:
    d = m.size
    if d == 1:
        return np.zeros(0, dtype=m.dtype)
    two_nu = 2 * params.nu
    a = params.beta_minus / two_nu
    b = params.beta_plus / two_nu
    rows, cols, sign = _gap_indices(d)
    # S[j, k]: distance from x_k to the nearer end of gap j
    S = D[rows, cols]
    em = np.expm1(-two_nu * gaps)[:, None]
    ep = np.expm1(two_nu * gaps)[:, None]
    delta = a * np.exp(-two_nu * S) * em + b * np.exp(two_nu * S) * ep
    return (sign * delta) @ m


def hamiltonian(state: PeakonState, params: ModelParams) -> float:
    """``1/2 sum m_j m_k G(x_j - x_k) - C M``.

    The ``-C M`` term makes the canonical equations reproduce the drift in
    ``xdot``; it does not affect ``mdot``.
    """
    D = state.distances()
    m = state.m
    return 0.5 * float(m @ green(D, params) @ m) - params.C * state.M
