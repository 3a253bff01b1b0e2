import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cases import random_state, rel_err
from cfpeakon.exceptions import (
    InconsistentData, InsufficientMoments, NegativeLength, OutOfRange, SingularHankel,
)
from cfpeakon.inverse import (
    AUDIT_LOG, MomentSequence, StringData, audit_odd_formula, classical_string_inversion,
    continued_fraction_oracle, hankel_minor, peakons_to_string, rational_moments,
    reconstruct_string, stieltjes_coefficients, stieltjes_rational, string_from_weyl,
    string_to_peakons, weyl_to_moments,
)
from cfpeakon.lax import build_A, build_T
from cfpeakon.model import ModelParams, PeakonState
from cfpeakon.poly import Poly
from cfpeakon.spectral import curve_data, weyl_series


def forward(state, params, order=None):
    A = build_A(state, params)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        sd = curve_data(A, params, strict=False)
    return weyl_series(A, sd, order or 2 * state.d), sd


def roundtrip(state, params, order=None):
    W, sd = forward(state, params, order)
    s = reconstruct_string(W, sd, params)
    return string_to_peakons(s, params), s


def test_minor_conventions():
    c = MomentSequence([2.0, 3.0, 5.0, 7.0])
    assert hankel_minor(c, 3, 0) == 1
    assert hankel_minor(c, 0, 1) == 2.0
    assert hankel_minor(c, 1, 2) == 3.0 * 7.0 - 5.0 * 5.0
    assert hankel_minor(MomentSequence([1.0] * 5), 0, 2) == 0
    with pytest.raises(InsufficientMoments):
        hankel_minor(c, 1, 3)


def test_minor_exact_on_fractions():
    c = MomentSequence([Fraction(1, k + 1) for k in range(7)])  # Hilbert moments
    assert hankel_minor(c, 0, 3) == Fraction(1, 2160)


def test_simple_pole():
    c = MomentSequence([1.0] * 6)
    assert stieltjes_coefficients(c, 2) == [1.0, 1.0]
    with pytest.raises(SingularHankel):
        stieltjes_coefficients(c, 3)


def test_oracle_on_simple_pole():
    assert continued_fraction_oracle(Poly([1]), Poly([1, 1])) == [1, 1]


def test_single_peakon_coefficients_follow_the_string():
    nu = 0.9
    s = PeakonState([0.3], [1.2])
    p = ModelParams.for_state(s, nu, 0.0)
    W, _ = forward(s, p, order=3)
    l_d, c = weyl_to_moments(W.coeffs, nu)
    a = stieltjes_coefficients(c, 2)
    string = peakons_to_string(s, nu)
    assert l_d == pytest.approx(string.lengths[0], rel=1e-13)
    assert a[0] == pytest.approx(2 * nu * string.masses[0], rel=1e-13)
    assert a[1] == pytest.approx(string.lengths[1], rel=1e-12)
    # the same numbers from the transition matrix by division
    T = build_T(s, p)
    direct = classical_string_inversion(T[0, 0], T[1, 0], nu)
    assert np.allclose(direct.lengths, string.lengths, rtol=1e-13)


def test_approximant_reproduces_moments():
    rng = np.random.default_rng(0)
    for _ in range(10):
        string = StringData(tuple(rng.uniform(0.2, 1.0, 4)), tuple(rng.uniform(0.5, 2.0, 3)), 1.0)
        a = []
        for g, l in zip(string.masses, string.lengths[1:]):
            a += [2 * g, l]
        num, den = stieltjes_rational(a)
        c = rational_moments(num, den, 8)
        got = stieltjes_coefficients(c, 6)
        back = rational_moments(*stieltjes_rational(got), 6)
        assert rel_err(back.c, c.c[:6]) < 1e-9
        assert rel_err(got, a) < 1e-9


def test_audit_prefers_classical_formula():
    record = audit_odd_formula(trials=10, depth=7)
    assert record["classical_valid"] is True
    assert record["printed_valid"] is False
    assert record["used"] == "classical"
    assert AUDIT_LOG[-1] == record


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(1, 40), min_size=1, max_size=9))
def test_exact_coefficients_match_oracle(ints):
    a = [Fraction(v, 8) for v in ints]
    num, den = stieltjes_rational(a)
    assert continued_fraction_oracle(num, den) == a
    c = rational_moments(num, den, len(a) + 1)
    assert stieltjes_coefficients(c, len(a)) == a


def test_string_map_fixed_point_and_range():
    s = StringData((1.0, 1.0), (2.0,), 1.0)  # y_1 = -1/2 + 1 = 1/2: the right end
    with pytest.raises(OutOfRange):
        string_to_peakons(s, 1.0)
    for nu in (0.3, 1.0, 2.5):
        centre = StringData((1 / (2 * nu), 1 / (2 * nu)), (1.0,), nu)
        assert string_to_peakons(centre, nu).x[0] == 0.0


@given(st.lists(st.floats(-2, 2), min_size=1, max_size=4, unique=True),
       st.lists(st.floats(0.1, 5), min_size=4, max_size=4), st.floats(0.2, 2))
def test_string_map_is_invertible(xs, ms, nu):
    xs = sorted(xs)
    if len(xs) > 1 and np.min(np.diff(xs)) < 1e-3:
        return
    state = PeakonState(xs, ms[: len(xs)])
    back = string_to_peakons(peakons_to_string(state, nu), nu)
    assert np.allclose(back.x, state.x, rtol=1e-9, atol=1e-9)
    assert np.allclose(back.m, state.m, rtol=1e-9)


def test_single_peakon_roundtrip():
    rng = np.random.default_rng(1)
    for _ in range(20):
        s, p = random_state(rng, 1, positive=True)
        rec, _ = roundtrip(s, p)
        assert abs(rec.x[0] - s.x[0]) < 1e-10 * max(1.0, abs(s.x[0]))
        assert abs(rec.m[0] / s.m[0] - 1) < 1e-10


def test_ch_reconstruction_matches_classical():
    rng = np.random.default_rng(2)
    for _ in range(10):
        s, p = random_state(rng, 2, beta_plus=0.0, positive=True)
        _, string = roundtrip(s, p)
        T = build_T(s, p)
        classical = classical_string_inversion(T[0, 0], T[1, 0], p.nu)
        assert rel_err(string.lengths, classical.lengths) < 1e-9
        assert rel_err(string.masses, classical.masses) < 1e-9


def test_total_length_after_closure():
    rng = np.random.default_rng(3)
    for _ in range(10):
        s, p = random_state(rng, 3, beta_plus=0.05, positive=True)
        _, string = roundtrip(s, p)
        assert string.total_length == pytest.approx(1 / p.nu, rel=1e-8)
        assert all(v > 0 for v in string.lengths)


def test_three_peakons_spec_distribution():
    rng = np.random.default_rng(4)
    for _ in range(20):
        gaps = rng.uniform(0.5, 1.5, 2)
        x = np.concatenate([[0.0], np.cumsum(gaps)])
        s = PeakonState(x - x.mean(), rng.uniform(0.5, 2.0, 3))
        p = ModelParams.for_state(s, 1.0, 0.02)
        rec, _ = roundtrip(s, p)
        assert np.max(np.abs(rec.x - s.x) / np.maximum(np.abs(s.x), 1.0)) < 1e-6
        assert np.max(np.abs(rec.m / s.m - 1)) < 1e-6


def test_moment_consistency():
    rng = np.random.default_rng(5)
    for d in (1, 2, 3):
        s, p = random_state(rng, d, positive=True)
        W, _ = forward(s, p)
        _, c = weyl_to_moments(W.coeffs, p.nu)
        a = stieltjes_coefficients(c, 2 * d - 1)
        back = rational_moments(*stieltjes_rational(a), c.count)
        assert rel_err(back.c, c.c) < 1e-9


@pytest.mark.parametrize("beta_plus", [0.0, 0.1])
def test_closure_consistency_with_extra_coefficient(beta_plus):
    """Only the first 2d coefficients of W are shared with the string's own
    Weyl function, so the extra one yields the string's l_0 only at beta_+ = 0."""
    rng = np.random.default_rng(6)
    for d in (1, 2, 3):
        s, p = random_state(rng, d, positive=True, beta_plus=beta_plus)
        W, sd = forward(s, p, order=2 * d + 1)
        string = reconstruct_string(W, sd, p)
        assert abs(string.diagnostics["l0_continued_fraction"] - string.lengths[-1]) < 1e-7


def test_ch_limit_of_reconstruction():
    rng = np.random.default_rng(7)
    s, _ = random_state(rng, 3, positive=True)
    nu = 1.0
    base, _ = roundtrip(s, ModelParams.for_state(s, nu, 0.0))
    for bp in (1e-2, 1e-4, 1e-6):
        rec, _ = roundtrip(s, ModelParams.for_state(s, nu, bp))
        diff = max(np.abs(rec.x - base.x).max(), np.abs(rec.m - base.m).max())
        assert diff <= bp


def test_insufficient_coefficients():
    rng = np.random.default_rng(8)
    s, p = random_state(rng, 2, positive=True)
    W, _ = forward(s, p)
    with pytest.raises(InsufficientMoments):
        string_from_weyl(W.coeffs[:3], 2, p.nu, s.M)


def test_corrupted_data_is_rejected():
    rng = np.random.default_rng(9)
    s, p = random_state(rng, 3, positive=True)
    W, _ = forward(s, p)
    for k in range(6):
        bad = list(W.coeffs)
        bad[k] = -bad[k]
        with pytest.raises((NegativeLength, SingularHankel, InconsistentData, OutOfRange)):
            string_from_weyl(bad, 3, p.nu, s.M)
