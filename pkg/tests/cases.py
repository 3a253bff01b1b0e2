"""Random configurations shared by the test modules."""
import numpy as np

from cfpeakon.model import ModelParams, PeakonState


def random_state(rng, d, nu=None, beta_plus=None, same_sign=True, positive=False,
                 min_gap=0.1, max_span=3.0, C_offset=0.0):
    """Centred positions with gaps at least ``min_gap / nu`` and masses in [0.5, 2]."""
    nu = rng.uniform(0.5, 1.5) if nu is None else nu
    beta_plus = rng.uniform(0.0, 0.5) if beta_plus is None else beta_plus
    if d > 1:
        gaps = min_gap + rng.dirichlet(np.ones(d - 1)) * rng.uniform(0.2, max_span)
        x = np.concatenate([[0.0], np.cumsum(gaps)]) / nu
    else:
        x = np.zeros(1)
    x = x - x.mean() + rng.uniform(-0.2, 0.2)
    m = rng.uniform(0.5, 2.0, d)
    if positive:
        pass
    elif same_sign:
        m = m * rng.choice([-1.0, 1.0])
    else:
        m = m * rng.choice([-1.0, 1.0], d)
    state = PeakonState(x, m)
    params = ModelParams.for_state(state, nu, beta_plus)
    if C_offset:
        params = params.replace(C=params.C + C_offset)
    return state, params


def bound_state(rng, d, nu=None, beta_plus=None, same_sign=True, C_offset=0.0):
    """State whose width keeps ``beta_- - beta_+ e^{2nu(x_d - x_1)}`` positive.

    That quantity is a positive multiple of the conserved constant trace
    coefficient, so it stays positive along the flow and no particle can
    escape to infinity; wider configurations with ``beta_+ > 0`` do escape in
    finite time. With ``same_sign=False`` each mass gets its own sign: the
    geometry is the same but collisions become possible.
    """
    nu = rng.uniform(0.5, 1.5) if nu is None else nu
    beta_plus = rng.uniform(0.0, 0.1) if beta_plus is None else beta_plus
    limit = np.log((beta_plus + 1) / beta_plus) / (2 * nu) if beta_plus > 0 else 4.0
    span = rng.uniform(0.3, 0.8) * min(limit, 4.0)
    gaps = rng.dirichlet(np.ones(d - 1)) * span if d > 1 else np.zeros(0)
    x = np.concatenate([[0.0], np.cumsum(gaps)])
    x -= x.mean()
    m = rng.uniform(0.5, 2.0, d) * rng.choice([-1.0, 1.0], 1 if same_sign else d)
    state = PeakonState(x, m)
    params = ModelParams.for_state(state, nu, beta_plus)
    if C_offset:
        params = params.replace(C=params.C + C_offset)
    return state, params


def paper_collision():
    """The two-peakon run with opposite-sign masses."""
    state = PeakonState([1.0, 2.0], [5.0, -1.0])
    return state, ModelParams.for_state(state, 2.0, 0.018)


def rel_err(a, b):
    """``max |a - b| / max |b|``."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))
