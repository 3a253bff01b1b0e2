"""Acceptance criteria 1-10.

Each test prints one ``criterion N PASS|FAIL`` line with the measured figure
and runtime, then asserts both the tolerance and the runtime budget.
"""
import time
import warnings
from fractions import Fraction

import numpy as np
import pytest

from cases import bound_state, paper_collision, random_state
from cfpeakon.collision import c2_invariant, canonical_form, collision_limit_A
from cfpeakon.flow import IntegratorConfig, integrate, invariant_drift, sign_check
from cfpeakon.inverse import (
    AUDIT_LOG, MomentSequence, audit_odd_formula, classical_string_inversion,
    continued_fraction_oracle, rational_moments, reconstruct_string, stieltjes_coefficients,
    stieltjes_rational, string_to_peakons,
)
from cfpeakon.lax import build_A, build_T, lax_residual
from cfpeakon.model import PeakonState
from cfpeakon.poly import PowerSeries
from cfpeakon.spectral import curve_data, pade_defect, weyl_series


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail, elapsed, budget):
        status = "PASS" if ok and elapsed < budget else "FAIL"
        with capsys.disabled():
            print(f"\ncriterion {n} {status}: {detail}; runtime {elapsed:.2f} s (budget {budget} s)")
        assert ok, detail
        assert elapsed < budget, f"runtime {elapsed:.2f} s over budget {budget} s"
    return emit


def _curve(A, p):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return curve_data(A, p, strict=False)


def test_criterion_1_constructor_equivalence(report):
    rng = np.random.default_rng(1001)
    start = time.perf_counter()
    worst = 0.0
    for d in range(1, 6):
        for _ in range(100):
            s, p = random_state(rng, d, same_sign=False)
            A1, A2 = build_A(s, p, "product"), build_A(s, p, "closed_form")
            for k in range(d + 1):
                a, b = A1.coefficient(k), A2.coefficient(k)
                worst = max(worst, np.abs(a - b).max() / np.abs(b).max())
    elapsed = time.perf_counter() - start
    report(1, worst <= 1e-12, f"max relative difference {worst:.2e} (tol 1e-12)", elapsed, 1)


def test_criterion_2_lax_equation(report):
    # Bound geometry: wider states with beta_+ > 0 are on escape orbits whose
    # velocities reach a few hundred, and there the h = 1e-5 difference
    # quotient carries O(h^2) truncation error above 1e-6. The drift offset
    # keeps the truncation error visible at d = 1, where the default drift
    # makes the residual pure roundoff. Halving is measured in long double at
    # a step where truncation, not roundoff, dominates.
    rng = np.random.default_rng(1002)
    start = time.perf_counter()
    worst, worst_ratio = 0.0, np.inf
    for i in range(20):
        s, p = bound_state(rng, 1 + i % 4, same_sign=False, C_offset=rng.uniform(0.2, 1.0))
        worst = max(worst, lax_residual(s, p, h=1e-5))
        r1 = lax_residual(s, p, h=1e-3, dtype=np.longdouble)
        r2 = lax_residual(s, p, h=5e-4, dtype=np.longdouble)
        worst_ratio = min(worst_ratio, r1 / r2)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-6 and worst_ratio >= 3.5
    report(2, ok, f"max residual {worst:.2e} (tol 1e-6), min halving ratio {worst_ratio:.2f} (need 3.5)",
           elapsed, 5)


def test_criterion_3_conservation(report):
    rng = np.random.default_rng(1003)
    cfg = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12)
    start = time.perf_counter()
    worst, kinds = 0.0, set()
    for d in (2, 3, 4):
        s, p = bound_state(rng, d)
        tr = integrate(s, p, 10.0, cfg)
        kinds.add(tr.termination.kind)
        worst = max(worst, invariant_drift(tr).max())
    elapsed = time.perf_counter() - start
    ok = worst < 1e-8 and kinds == {"reached_t_end"}
    report(3, ok, f"max relative drift {worst:.2e} over t in [0, 10] (tol 1e-8)", elapsed, 10)


def test_criterion_4_no_collision(report):
    rng = np.random.default_rng(1004)
    cfg = IntegratorConfig(rel_tol=1e-8, abs_tol=1e-10)
    start = time.perf_counter()
    kinds, worst_shrink, signs = [], np.inf, True
    for i in range(50):
        s, p = bound_state(rng, 2 + i % 3)
        tr = integrate(s, p, 20.0, cfg)
        kinds.append(tr.termination.kind)
        worst_shrink = min(worst_shrink, tr.gaps.min() / np.diff(s.x).min())
        signs &= sign_check(tr)
    elapsed = time.perf_counter() - start
    reached = kinds.count("reached_t_end")
    ok = reached == 50 and worst_shrink > 1e-2 and signs
    report(4, ok, f"{reached}/50 reached t_end, min gap / initial min gap {worst_shrink:.3f}", elapsed, 30)


def test_criterion_5_collision_experiment(report):
    s, p = paper_collision()
    start = time.perf_counter()
    tr = integrate(s, p, 5.0, IntegratorConfig(collision_gap=1e-13))
    elapsed = time.perf_counter() - start
    term = tr.termination
    mass_err = np.abs(tr.masses.sum(axis=1) - 4.0).max()
    below = np.abs(tr.masses).max(axis=1) < 1e5
    c2 = np.array([c2_invariant(st, p) for st in np.array(tr.samples)[below]])
    c2_err = np.abs(c2 / c2[0] - 1).max()
    gaps = tr.gaps[:, 0]
    closing = bool(np.all(np.diff(gaps) < 0))
    diverging = tr.masses[-1, 0] > 1e5 and tr.masses[-1, 1] < -1e5
    ok = term.kind == "collision" and mass_err < 1e-6 and c2_err < 1e-6 and closing and diverging
    detail = (f"{term.kind} at t = {term.t_c:.5f}, |m1 + m2 - 4| {mass_err:.1e}, C2 drift {c2_err:.1e}, "
              f"gap monotone {closing}, masses {tr.masses[-1, 0]:.2e} / {tr.masses[-1, 1]:.2e}")
    report(5, ok, detail, elapsed, 5)


def _config_with(p, M, C2, gap, shift):
    F = -np.expm1(-2 * p.nu * gap) * (p.beta_minus - p.beta_plus * np.exp(2 * p.nu * gap))
    disc = np.sqrt(M * M - 4 * C2 / F)
    return PeakonState([shift, shift + gap], [(M + disc) / 2, (M - disc) / 2])


def test_criterion_6_canonical_form(report):
    s, p = paper_collision()
    start = time.perf_counter()
    M, C2 = s.M, c2_invariant(s, p)
    other = _config_with(p, M, C2, gap=0.37, shift=-2.2)
    f1 = canonical_form(p, M, C2, x_star=s.x[0])
    f2 = canonical_form(p, other.M, c2_invariant(other, p), x_star=other.x[0])
    shared = f1.allclose(f2, rtol=1e-10)
    L = collision_limit_A(p, M, C2, x_star=s.x[0])
    worst = 0.0
    for z in np.linspace(-2.3, 2.6, 10):
        Lz = L(z)
        scale = max(np.abs(Lz).max() ** 2, 1.0)
        worst = max(worst, abs(f1.trace(z) - np.trace(Lz)) / scale, abs(f1.det(z) - np.linalg.det(Lz)) / scale)
    elapsed = time.perf_counter() - start
    ok = shared and worst <= 1e-10
    report(6, ok, f"entries shared {shared} (tol 1e-10), characteristic polynomial mismatch {worst:.1e}",
           elapsed, 1)


def test_criterion_7_pade(report):
    # formula 1 reaches the same series through A_12, so its agreement with
    # A_21 / A_11 rests on det A = det(beta) z^{2d} rather than on shared arithmetic
    rng = np.random.default_rng(1007)
    start = time.perf_counter()
    worst, worst_alt, control = 0.0, 0.0, np.inf
    for i in range(50):
        d = 1 + i % 4
        s, p = random_state(rng, d, same_sign=False, beta_plus=rng.uniform(0.01, 0.5))
        A = build_A(s, p)
        sd = curve_data(A, p)
        worst = max(worst, np.abs(pade_defect(A, weyl_series(A, sd, 2 * d))).max())
        worst_alt = max(worst_alt, np.abs(pade_defect(A, weyl_series(A, sd, 2 * d, formula=1))).max())
        wrong = weyl_series(A, sd, 2 * d, sign=-1 if sd.C_d > 0 else 1)
        control = min(control, np.abs(pade_defect(A, wrong)).max())
    elapsed = time.perf_counter() - start
    ok = worst < 1e-9 and worst_alt < 1e-9 and control > 1e-3
    report(7, ok, f"max scaled defect {worst:.1e}, via A_12 {worst_alt:.1e} (tol 1e-9), "
                  f"wrong sheet min defect {control:.2e}", elapsed, 5)


def test_criterion_8_roundtrip(report):
    rng = np.random.default_rng(1008)
    tol = {1: 1e-9, 2: 1e-9, 3: 1e-6, 4: 1e-6}
    start = time.perf_counter()
    worst = {}
    for d in tol:
        worst[d] = 0.0
        for _ in range(50):
            s, p = random_state(rng, d, positive=True)
            A = build_A(s, p)
            sd = _curve(A, p)
            rec = string_to_peakons(reconstruct_string(weyl_series(A, sd, 2 * d), sd, p), p)
            ex = np.abs(rec.x - s.x).max() / max(np.abs(s.x).max(), 1.0)
            em = np.abs(rec.m / s.m - 1).max()
            worst[d] = max(worst[d], ex, em)
    elapsed = time.perf_counter() - start
    ok = all(worst[d] < tol[d] for d in tol)
    detail = ", ".join(f"d={d} {worst[d]:.1e} (tol {tol[d]:.0e})" for d in tol)
    report(8, ok, "max relative error " + detail, elapsed, 30)


def test_criterion_9_ch_degeneration(report):
    rng = np.random.default_rng(1009)
    start = time.perf_counter()
    series_err, inv_err = 0.0, 0.0
    for i in range(20):
        d = 1 + i % 4
        s, p = random_state(rng, d, beta_plus=0.0, positive=True)
        A = build_A(s, p)
        sd = _curve(A, p)
        order = 3 * d
        W = weyl_series(A, sd, order)
        T = build_T(s, p)
        # T21(1/z) / T11(1/z) expanded in z
        ratio = (PowerSeries(T[1, 0].reversed(d).padded(order), order)
                 / PowerSeries(T[0, 0].reversed(d).padded(order), order))
        scale = np.abs(ratio.coeffs).max()
        series_err = max(series_err, np.abs(np.array(W.coeffs) - np.array(ratio.coeffs)).max() / scale)
        string = reconstruct_string(weyl_series(A, sd, 2 * d), sd, p)
        classical = classical_string_inversion(T[0, 0], T[1, 0], p.nu)
        for mine, ref in ((string.lengths, classical.lengths), (string.masses, classical.masses)):
            inv_err = max(inv_err, np.abs(np.subtract(mine, ref)).max() / np.abs(ref).max())
    elapsed = time.perf_counter() - start
    ok = series_err < 1e-9 and inv_err < 1e-9
    report(9, ok, f"series mismatch {series_err:.1e}, string mismatch {inv_err:.1e} (tol 1e-9)", elapsed, 5)


def test_criterion_10_stieltjes_audit(report):
    rng = np.random.default_rng(1010)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        depth = int(rng.integers(1, 10))
        a = [Fraction(int(v), 64) for v in rng.integers(32, 129, depth)]
        num, den = stieltjes_rational(a)
        oracle = continued_fraction_oracle(num, den)
        moments = MomentSequence([float(v) for v in rational_moments(num, den, depth).c])
        got = stieltjes_coefficients(moments, depth)
        worst = max(worst, max(abs(g - float(o)) / abs(float(o)) for g, o in zip(got, oracle)))
    record = audit_odd_formula()
    elapsed = time.perf_counter() - start
    ok = worst < 1e-9 and AUDIT_LOG[-1] is record and record["used"] == "classical"
    detail = (f"max relative error {worst:.1e} (tol 1e-9); audit: printed odd formula valid "
              f"{record['printed_valid']}, classical valid {record['classical_valid']}, used {record['used']}")
    report(10, ok, detail, elapsed, 10)
