"""Adaptive Dormand-Prince integration of the peakon equations with collision
and blow-up events and invariant logging."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import StepFailure
from .lax import trace_coefficients
from .model import ModelParams, PeakonState, distance_matrix, field_from_distances, gap_velocities_from

log = logging.getLogger(__name__)

# Dormand-Prince 5(4) tableau
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

SAFETY = 0.9
PI_ALPHA = 0.7 / 5
PI_BETA = 0.4 / 5
MIN_FACTOR, MAX_FACTOR = 0.2, 5.0
MIN_STEP_FRACTION = 1e-14
EVENT_TIME_TOL = 1e-10


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = 1.0
    collision_gap: float = 1e-9
    mass_cap: float = 1e6

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "max_step", "collision_gap", "mass_cap"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"{name} must be positive, got {value}")


@dataclass(frozen=True)
class Termination:
    """How a run ended: ``reached_t_end``, ``collision``, ``blowup`` or ``step_failure``.

    For a collision ``pair`` is the index ``i`` of the closing gap between
    particles ``i`` and ``i + 1`` (0-based) and ``t_c`` the event time.
    """

    kind: str
    pair: int | None = None
    t_c: float | None = None

    def __str__(self) -> str:
        if self.kind == "collision":
            return f"collision({self.pair}, {self.t_c!r})"
        return self.kind


@dataclass
class Trajectory:
    params: ModelParams
    samples: list = field(default_factory=list)
    invariant_log: list = field(default_factory=list)
    termination: Termination | None = None
    rejected: int = 0

    def append(self, state: PeakonState):
        self.samples.append(state)
        self.invariant_log.append(trace_coefficients(state, self.params))

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    @property
    def positions(self) -> np.ndarray:
        return np.array([s.x for s in self.samples])

    @property
    def masses(self) -> np.ndarray:
        return np.array([s.m for s in self.samples])

    @property
    def gaps(self) -> np.ndarray:
        return np.array([s.gaps for s in self.samples])

    @property
    def invariants(self) -> np.ndarray:
        return np.array(self.invariant_log)

    @property
    def final(self) -> PeakonState:
        return self.samples[-1]


# state vector layout: [x_1, gaps (d-1), masses (d)]

def _pack(state: PeakonState) -> np.ndarray:
    return np.concatenate([[state.x[0]], state.gaps, state.m])


def _unpack(y: np.ndarray, d: int, t: float) -> PeakonState:
    gaps = y[1:d]
    x = y[0] + np.concatenate([[0.0], np.cumsum(gaps)])
    return PeakonState(x, y[d:], t, gaps=gaps, strict=False)


def _rhs(y: np.ndarray, d: int, params: ModelParams) -> np.ndarray:
    gaps, m = y[1:d], y[d:]
    D = distance_matrix(gaps)
    xdot, mdot = field_from_distances(D, m, params)
    return np.concatenate([xdot[:1], gap_velocities_from(D, gaps, m, params), mdot])


def _dopri_step(y, f0, h, d, params):
    k = [f0]
    for i in range(1, 7):
        yi = y + h * sum(a * kj for a, kj in zip(_A[i], k))
        k.append(_rhs(yi, d, params))
    # first-same-as-last: the final stage is evaluated at y_new
    y_new = y + h * sum(b * kj for b, kj in zip(_B5, k))
    err = h * sum(e * kj for e, kj in zip(_E, k))
    return y_new, err, k[6]


def _error_norm(err, y, y_new, d, cfg):
    big = np.maximum(np.abs(y), np.abs(y_new))
    scale = cfg.abs_tol + cfg.rel_tol * big
    # gaps: purely relative so a closing gap keeps its leading digits
    scale[1:d] = cfg.rel_tol * big[1:d] + 1e-300
    return float(np.max(np.abs(err) / scale))


def _initial_step(y, f0, d, params, cfg, span):
    scale = cfg.abs_tol + cfg.rel_tol * np.abs(y)
    scale[1:d] = cfg.rel_tol * np.abs(y[1:d]) + 1e-300
    d0 = np.max(np.abs(y) / scale)
    d1 = np.max(np.abs(f0) / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    return min(h0, cfg.max_step, abs(span))


def integrate(state0: PeakonState, params: ModelParams, t_end: float, cfg: IntegratorConfig | None = None,
              ) -> Trajectory:
    """Integrate from ``state0.t`` to ``t_end`` (either direction).

    Stops early on a collision (some gap falls below ``cfg.collision_gap``,
    event time refined by bisection) or a blow-up (``|m_j| > cfg.mass_cap``).
    Raises :class:`StepFailure` carrying the partial trajectory when the step
    size underflows.
    """
    cfg = cfg or IntegratorConfig()
    d = state0.d
    if params.d != d:
        raise ValueError(f"params are for d={params.d}, state has d={d}")
    traj = Trajectory(params)
    traj.append(state0)
    span = t_end - state0.t
    if span == 0:
        traj.termination = Termination("reached_t_end")
        return traj
    direction = math.copysign(1.0, span)
    h_min = MIN_STEP_FRACTION * abs(span)
    t, y = state0.t, _pack(state0)
    f = _rhs(y, d, params)
    h = _initial_step(y, f, d, params, cfg, span)
    err_prev = 1.0
    last_rejected = False
    while True:
        remaining = t_end - t
        if abs(remaining) <= 1e-15 * max(1.0, abs(t_end)):
            traj.termination = Termination("reached_t_end")
            return traj
        h = min(h, cfg.max_step, abs(remaining))
        if h < h_min and h < abs(remaining):
            traj.termination = Termination("step_failure")
            raise StepFailure(f"step size {h:.3g} below {h_min:.3g} at t={t!r}", traj)
        y_new, err, f_new = _dopri_step(y, f, direction * h, d, params)
        en = _error_norm(err, y, y_new, d, cfg)
        if not np.isfinite(en):
            en = 1e10
        if en > 1.0:
            traj.rejected += 1
            h *= max(MIN_FACTOR, SAFETY * en ** (-1 / 5))
            last_rejected = True
            continue
        gaps_new = y_new[1:d]
        if d > 1 and np.min(gaps_new) < cfg.collision_gap:
            _collision(traj, t, y, f, direction * h, d, params, cfg)
            return traj
        t_new = t_end if h == abs(remaining) else t + direction * h
        state = _unpack(y_new, d, t_new)
        traj.append(state)
        if np.max(np.abs(state.m)) > cfg.mass_cap:
            traj.termination = Termination("blowup")
            return traj
        factor = SAFETY * max(en, 1e-10) ** (-PI_ALPHA) * err_prev ** PI_BETA
        factor = min(MAX_FACTOR, max(MIN_FACTOR, factor))
        if last_rejected:
            factor = min(factor, 1.0)
        h *= factor
        err_prev = max(en, 1e-4)
        last_rejected = False
        t, y, f = t_new, y_new, f_new


def _collision(traj, t, y, f, h, d, params, cfg):
    """Bisect the step length for the first time a gap reaches ``collision_gap``."""
    lo, hi = 0.0, h
    y_lo = y
    while abs(hi - lo) > EVENT_TIME_TOL:
        mid = 0.5 * (lo + hi)
        y_mid, _, _ = _dopri_step(y, f, mid, d, params)
        if np.min(y_mid[1:d]) < cfg.collision_gap:
            hi = mid
        else:
            lo, y_lo = mid, y_mid
    if lo != 0.0:
        traj.append(_unpack(y_lo, d, t + lo))
    pair = int(np.argmin(y_lo[1:d]))
    traj.termination = Termination("collision", pair, float(t + 0.5 * (lo + hi)))
    log.info("collision of particles %d and %d at t=%.12g", pair, pair + 1, t + 0.5 * (lo + hi))


def invariant_drift(traj: Trajectory, floor: float = 1e-12) -> np.ndarray:
    """Per-coefficient ``max_t |c(t) - c(0)| / max(|c(0)|, floor)``."""
    inv = traj.invariants
    c0 = inv[0]
    return np.max(np.abs(inv - c0), axis=0) / np.maximum(np.abs(c0), floor)


def sign_check(traj: Trajectory) -> bool:
    """True iff no mass changes sign along the trajectory."""
    s0 = np.sign(traj.samples[0].m)
    return all(np.array_equal(np.sign(s.m), s0) for s in traj.samples)
