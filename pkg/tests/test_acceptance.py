"""Acceptance suite: one PASS/FAIL line per criterion, with wall-clock limits.

Each test measures its own runtime (including any first-call JIT cost) and
prints a summary line straight to the terminal so it survives output capture.
"""
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from maryland.arithmetics import cf_expand, delta_index, localized_phase, random_phase
from maryland.closed_forms import ids, lyapunov, zeta_coeffs, zeta_quadrature
from maryland.cocycles import (a_infinity_exponent, acceleration, cos_product_bound,
                               gordon_sample_min, i_epsilon, le_numeric, realizing_levels)
from maryland.eigensystem import (default_decay_target, default_truncation, eigenfunction,
                                  quantized_eigenvalues, solve_cohomological)
from maryland.errors import SmallDivisorBreakdown
from maryland.spectral_report import (MIXED, PP_EVERYWHERE, SC_EVERYWHERE, classify,
                                      finite_volume_ids, theta_constancy_check)

GOLDEN = cf_expand("golden", 40)
LIOUVILLE = cf_expand("cfgen:exp:2:6", 6)


@pytest.fixture
def report(capsys):
    def emit(number, ok, elapsed, limit, detail):
        status = "PASS" if ok and elapsed < limit else "FAIL"
        with capsys.disabled():
            print(f"\n[criterion {number:2d}] {status}  {elapsed:6.2f}s (< {limit:g}s)  {detail}")
        assert ok, detail
        assert elapsed < limit, f"runtime {elapsed:.2f}s exceeds {limit}s"
    return emit


def test_criterion_1_le_closed_form(report):
    t0 = time.perf_counter()
    worst = 0.0
    for lam in (1.0, 2.0):
        for e in (0.0, 1.0, 2.0):
            est = le_numeric("A", lam, e, GOLDEN, 0.0, 100_000, 8, seed=1)
            worst = max(worst, abs(est.value - float(lyapunov(lam, e))))
    dt = time.perf_counter() - t0
    report(1, worst <= 0.01, dt, 10, f"max |le_numeric - gamma| = {worst:.2e} (<= 0.01)")


def test_criterion_2_regular_singular_split(report):
    t0 = time.perf_counter()
    worst = 0.0
    for lam, e in ((1.0, 0.0), (1.0, 1.0), (2.0, 2.0)):
        a = le_numeric("A", lam, e, GOLDEN, 0.0, 100_000, 8, seed=2).value
        d = le_numeric("D", lam, e, GOLDEN, 0.0, 100_000, 8, seed=2).value
        worst = max(worst, abs(a - d - math.log(2)))
    dt = time.perf_counter() - t0
    report(2, worst <= 0.02, dt, 10, f"max |L(A) - L(D) - ln2| = {worst:.2e} (<= 0.02)")


def test_criterion_3_jensen(report):
    t0 = time.perf_counter()
    err0 = abs(i_epsilon(0.0) + math.log(2))
    err5 = abs(i_epsilon(0.5) - (math.pi / 2 - math.log(2)))
    dt = time.perf_counter() - t0
    report(3, max(err0, err5) <= 1e-6, dt, 1, f"|I_0 + ln2| = {err0:.1e}, |I_0.5 - pi/2 + ln2| = {err5:.1e}")


def test_criterion_4_acceleration(report):
    t0 = time.perf_counter()
    grid = (0.2, 0.5, 1.0, 2.0)
    ra = acceleration("A", 1.0, 0.0, GOLDEN, grid, 100_000, 8, seed=3)
    rd = acceleration("D", 1.0, 0.0, GOLDEN, grid, 100_000, 8, seed=3)
    dev_a = max(abs(s) for s in ra.slopes)
    dev_d = max(abs(s - 0.5) for s in rd.slopes)
    big = le_numeric("A", 1.0, 0.0, GOLDEN, 3.0, 100_000, 8, seed=3).value
    dev_inf = abs(big - a_infinity_exponent(1.0, 0.0))
    dt = time.perf_counter() - t0
    ok = dev_a <= 0.05 and dev_d <= 0.05 and dev_inf <= 0.01
    report(4, ok, dt, 30, f"max|slope_A| = {dev_a:.1e}, max|slope_D - 1/2| = {dev_d:.1e}, "
                          f"|L(A_3) - ln|ev(A_inf)|| = {dev_inf:.1e}")


def test_criterion_5_zeta_oracle(report):
    t0 = time.perf_counter()
    worst = 0.0
    for lam, e in ((1, 0), (1, 0.7), (2, -1.3)):
        z = zeta_coeffs(lam, e, 50)
        exact = np.array([z[n] for n in range(-50, 51)])
        worst = max(worst, float(np.abs(zeta_quadrature(lam, e, 50) - exact).max()))
    dt = time.perf_counter() - t0
    report(5, worst <= 1e-8, dt, 5, f"max |quadrature - closed form| over |n| <= 50 = {worst:.1e}")


def test_criterion_6_localization(report):
    t0 = time.perf_counter()
    res, dec = 0.0, 0.0
    for r in quantized_eigenvalues(1.0, GOLDEN, 0, range(-2, 3)):
        _, d = eigenfunction(r)
        res = max(res, d.residual)
        dec = max(dec, abs(d.decay_rate + r.gamma) / r.gamma)
    dt = time.perf_counter() - t0
    report(6, res <= 1e-6 and dec <= 0.1, dt, 30,
           f"max residual = {res:.1e} (<= 1e-6), max relative decay error = {dec:.3f} (<= 0.1)")


def test_criterion_7_finite_volume_ids(report):
    t0 = time.perf_counter()
    eg = np.linspace(-3, 3, 13)
    dev = float(np.abs(finite_volume_ids(1.0, GOLDEN, Fraction(13, 100), eg, 2000) - ids(1.0, eg)).max())
    const = theta_constancy_check(1.0, GOLDEN, (Fraction(13, 100), Fraction(71, 100)), eg, 2000)
    dt = time.perf_counter() - t0
    report(7, dev <= 0.01 and const <= 0.02, dt, 20,
           f"sup |Sturm - closed form| = {dev:.1e} (<= 0.01), theta deviation = {const:.1e} (<= 0.02)")


def test_criterion_8_small_divisor_breakdown(report):
    # At e = 0 exactly k = 1/2 and every even zeta mode vanishes, so the resonant
    # divisor at q_1 = 8 is never excited (see the xfail below).  The breakdown is
    # tested at the quantized energy of the uniform phase closest to 0 instead.
    t0 = time.perf_counter()
    th = random_phase(0)
    r = min(quantized_eigenvalues(1.0, LIOUVILLE, th, range(-8, 9)), key=lambda r: abs(r.e))
    K = default_truncation(default_decay_target(r.gamma, r.delta_hat))
    try:
        solve_cohomological(zeta_coeffs(1.0, r.e, K), LIOUVILLE, K)
        broke, where = False, None
    except SmallDivisorBreakdown as exc:
        broke, where = True, exc.k
    loc = quantized_eigenvalues(1.0, LIOUVILLE, localized_phase(LIOUVILLE, seed=0).theta, [0])[0]
    _, d = eigenfunction(loc)
    dt = time.perf_counter() - t0
    report(8, broke and d.residual <= 1e-5, dt, 60,
           f"uniform phase e = {r.e:.4f}: breakdown = {broke} at k = {where}; "
           f"localized phase residual = {d.residual:.1e} (<= 1e-5)")


@pytest.mark.xfail(strict=True, reason="k(0) = 1/2 removes every even zeta mode, so q_1 = 8 never resonates")
def test_criterion_8_literal_zero_energy():
    g = float(lyapunov(1.0, 0.0))
    K = default_truncation(default_decay_target(g, delta_index(LIOUVILLE, random_phase(0)).value))
    with pytest.raises(SmallDivisorBreakdown):
        solve_cohomological(zeta_coeffs(1.0, 0.0, K), LIOUVILLE, K)


def test_criterion_9_gordon(report):
    t0 = time.perf_counter()
    m = gordon_sample_min(100_000, seed=9)
    dt = time.perf_counter() - t0
    report(9, m >= 0.25, dt, 5, f"min over 1e5 samples = {m:.4f} (>= 1/4)")


def test_criterion_10_cos_product(report):
    t0 = time.perf_counter()
    consts = []
    for lvl in (6, 12, 20):
        rep = cos_product_bound(GOLDEN, Fraction(1, 10), lvl)
        assert rep.q in (13, 233, 10946)
        consts.append(rep.empirical_constant)
    alpha = cf_expand("cfgen:exp:1:4", 4)
    th = random_phase(10)
    levels = realizing_levels(alpha, th, 0.2)
    holds = [cos_product_bound(alpha, th, k, epsilon=0.2).product_bound_holds for k in levels]
    dt = time.perf_counter() - t0
    ok = max(consts) <= 5 and len(levels) > 0 and all(holds)
    report(10, ok, dt, 10, f"|S|/ln q_n = {', '.join(f'{c:.3f}' for c in consts)} (<= 5); "
                           f"product bound at levels {levels}: {holds}")


def test_criterion_11_classifier(report):
    t0 = time.perf_counter()
    dio = classify(1.0, GOLDEN, 0.25, 20)
    gen = classify(1.0, LIOUVILLE, random_phase(0))
    loc = classify(1.0, LIOUVILLE, localized_phase(LIOUVILLE, seed=0))
    err = 0.0
    if gen.boundary_energies is not None:
        err = abs(float(lyapunov(1.0, gen.boundary_energies[1])) - gen.delta_hat.value)
    dt = time.perf_counter() - t0
    ok = (dio.case_id == PP_EVERYWHERE and gen.case_id in (MIXED, SC_EVERYWHERE)
          and loc.case_id == PP_EVERYWHERE and err <= 1e-9)
    report(11, ok, dt, 10, f"cases = ({dio.case_number}, {gen.case_number}, {loc.case_number}), "
                           f"|gamma(e*) - delta_hat| = {err:.1e}")
