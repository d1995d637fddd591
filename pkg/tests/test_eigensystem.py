import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from maryland.arithmetics import cf_expand, localized_phase, random_phase
from maryland.closed_forms import ZetaCoefficients, ids, lyapunov, zeta_coeffs
from maryland.eigensystem import (apply_operator, build_eigenfunction, check_tk_condition,
                                  default_decay_target, default_halfwidth, default_truncation,
                                  divisors, eigenfunction, quantized_eigenvalues,
                                  solve_cohomological, support_membership)
from maryland.errors import IllConditionedSolve, SmallDivisorBreakdown

GOLDEN = cf_expand("golden", 40)
LIOUVILLE = cf_expand("cfgen:exp:2:6", 6)


def _zero_zeta(K):
    return ZetaCoefficients(0.0, np.zeros(K), 0.5, 0.5)


def test_quantized_examples():
    recs = {r.m: r for r in quantized_eigenvalues(1, GOLDEN, 0, range(-2, 3))}
    assert recs[0].e == 0
    assert recs[1].e == pytest.approx(-recs[-1].e, abs=1e-11)
    assert float(recs[1].k_target) == pytest.approx(0.118034, abs=1e-6)
    assert float(recs[-1].k_target) == pytest.approx(0.881966, abs=1e-6)
    assert recs[1].e == pytest.approx(-3.1764731, abs=1e-6)
    for r in recs.values():
        assert abs(ids(1, r.e) - float(r.k_target)) <= 1e-12
        assert r.gamma == pytest.approx(float(lyapunov(1, r.e)))
        assert r.predicted_pp


def test_quantization_lattice_condition():
    th = Fraction(3, 10)
    for r in quantized_eigenvalues(0.7, GOLDEN, th, range(-4, 5)):
        with mpmath.workprec(GOLDEN.default_precision()):
            x = r.k_target - (mpmath.mpf(3) / 10 - mpmath.mpf(1) / 2) - r.m * GOLDEN.value()
            assert abs(x - mpmath.nint(x)) < mpmath.mpf(2) ** -100


def test_reflection_covariance():
    th = Fraction(21, 100)
    a = {r.m: r.e for r in quantized_eigenvalues(1.5, GOLDEN, th, range(-3, 4))}
    b = {r.m: r.e for r in quantized_eigenvalues(1.5, GOLDEN, 1 - th, range(-3, 4))}
    for m in a:
        assert a[m] == pytest.approx(-b[-m], abs=1e-10)


def test_flags_non_pp_records():
    th = random_phase(1)
    recs = quantized_eigenvalues(1, LIOUVILLE, th, range(-3, 4))
    for r in recs:
        assert r.predicted_pp == (r.gamma > r.delta_hat)
    assert any(not r.predicted_pp for r in recs)


def test_chord_bounds():
    for a in (GOLDEN, cf_expand("sqrt2m1", 20), LIOUVILLE):
        K = min(a.q(a.depth - 1), 5000)
        d = divisors(a, K)
        for n in range(a.depth):
            q = a.q(n)
            if q > K:
                break
            r = abs(float(a.residual(q)))
            assert 4 * r * (1 - 1e-12) <= abs(d[q - 1]) <= 2 * math.pi * r * (1 + 1e-12)


def test_zero_zeta_gives_zero_psi():
    psi = solve_cohomological(_zero_zeta(20), GOLDEN, 20)
    assert np.all(psi.coeffs == 0)
    assert psi[0] == 0 and psi[-3] == 0


def test_psi_golden_no_breakdown():
    z = zeta_coeffs(1, 0, 200)
    rho = z.gamma / 4
    psi = solve_cohomological(z, GOLDEN, 200, rho=rho)
    k = np.arange(1, 201)
    assert np.all(np.abs(psi.coeffs) <= np.exp(-rho * k))
    assert np.all(np.abs(psi.coeffs) <= np.abs(z.coeffs) / psi.min_divisor + 1e-300)
    for j in (1, 5, 17):
        assert psi[-j] == psi[j].conjugate()
    # psi solves the difference equation mode by mode
    d = divisors(GOLDEN, 200)
    assert np.allclose(psi.coeffs * d, z.coeffs, atol=1e-17)


def test_psi_difference_equation_in_x():
    z = zeta_coeffs(1.3, 0.6, 150)
    psi = solve_cohomological(z, GOLDEN, 150)
    a = float(GOLDEN)
    x = np.linspace(0, 1, 64, endpoint=False)
    zeta_shift = z.zeta0 + 2 * np.cos(2 * np.pi * np.outer(x - a, np.arange(1, 151))) @ z.coeffs
    lhs = psi.evaluate(x) - psi.evaluate(x - a)
    assert np.abs(lhs - (zeta_shift - z.zeta0)).max() <= 1e-12


def test_psi_conjugate_symmetry_in_dict():
    psi = solve_cohomological(zeta_coeffs(2, -0.4, 40), GOLDEN, 40)
    d = psi.as_dict()
    for k in range(1, 41):
        assert abs(d[-k] - d[k].conjugate()) <= 1e-14


def test_breakdown_on_liouville_generic_phase():
    for seed in range(5):
        th = random_phase(seed)
        recs = quantized_eigenvalues(1, LIOUVILLE, th, range(-8, 9))
        r = min(recs, key=lambda r: abs(r.e))
        assert r.delta_hat > r.gamma + 0.1
        K = default_truncation(default_decay_target(r.gamma, r.delta_hat))
        with pytest.raises(SmallDivisorBreakdown) as exc:
            solve_cohomological(zeta_coeffs(1, r.e, K), LIOUVILLE, K)
        assert exc.value.k == LIOUVILLE.q(1)


def test_zero_energy_has_no_even_modes():
    # k(0) = 1/2 kills every even zeta mode, including the small divisor at q_1 = 8
    z = zeta_coeffs(1, 0, 200)
    assert np.all(np.abs(z.coeffs[1::2]) < 1e-17)
    psi = solve_cohomological(z, LIOUVILLE, 200)
    assert abs(psi[8]) < 1e-10


def test_divisor_floor():
    z = zeta_coeffs(1, 0.3, 20)
    with pytest.raises(SmallDivisorBreakdown):
        solve_cohomological(z, LIOUVILLE, 20, divisor_floor=1e-3, rho=1e-9)
    solve_cohomological(z, GOLDEN, 20, divisor_floor=1e-3)


def test_build_golden_m0():
    r = quantized_eigenvalues(1, GOLDEN, 0, [0])[0]
    rho = default_decay_target(r.gamma, r.delta_hat)
    K = default_truncation(rho)
    psi = solve_cohomological(zeta_coeffs(1, r.e, K), GOLDEN, K, rho=rho)
    u, d = build_eigenfunction(r, psi, 512)
    assert u.shape == (1025,)
    assert d.chat_modulus_error <= 1e-14
    assert d.residual <= 1e-6
    assert abs(d.decay_rate + float(lyapunov(1, 0))) <= 0.1 * float(lyapunov(1, 0))
    # independent residual straight from the operator definition
    n = np.arange(-512, 513)
    with mpmath.workprec(200):
        al = GOLDEN.value(200)
        pot = np.array([float(mpmath.tan(mpmath.pi * (j * al))) for j in n[256:769]])
    inner = u[256:769]
    hu = u[257:770] + u[255:768] + pot * inner
    assert np.linalg.norm(hu - r.e * inner) / np.linalg.norm(inner) <= 1e-6


def test_build_golden_all_labels():
    for r in quantized_eigenvalues(1, GOLDEN, 0, range(-2, 3)):
        u, d = eigenfunction(r)
        assert d.residual <= 1e-6
        assert abs(d.decay_rate + r.gamma) <= 0.1 * r.gamma
        assert d.record.residual == d.residual


def test_build_other_phase_and_coupling():
    th = Fraction(37, 100)
    for r in quantized_eigenvalues(2.0, GOLDEN, th, range(-1, 2)):
        u, d = eigenfunction(r)
        assert d.residual <= 1e-6
        assert abs(d.decay_rate + r.gamma) <= 0.1 * r.gamma


def test_build_requires_width():
    r = quantized_eigenvalues(1, GOLDEN, 0, [0])[0]
    psi = solve_cohomological(zeta_coeffs(1, 0, 100), GOLDEN, 100)
    with pytest.raises(ValueError):
        build_eigenfunction(r, psi, 300)


def test_growth_monitor():
    r = quantized_eigenvalues(1, GOLDEN, 0, [0])[0]
    psi = solve_cohomological(zeta_coeffs(1, 0, 64), GOLDEN, 64)
    with pytest.raises(IllConditionedSolve):
        build_eigenfunction(r, psi, 256, growth_bound=1.5)


def test_localized_phase_build():
    th = localized_phase(LIOUVILLE, seed=0).theta
    r = quantized_eigenvalues(1, LIOUVILLE, th, [0])[0]
    assert r.predicted_pp
    u, d = eigenfunction(r)
    assert d.residual <= 1e-5


def test_defaults():
    assert default_decay_target(0.48, 0.0) == pytest.approx(0.12)
    assert default_decay_target(0.48, 0.4) == pytest.approx(0.04)
    assert default_decay_target(0.48, 2.0) == pytest.approx(0.12)
    assert default_truncation(0.12) == 100
    assert default_halfwidth(40) == 256 and default_halfwidth(100) == 400


def test_tk_condition_zero_zeta():
    rep = check_tk_condition(1, 0, GOLDEN, 0, 0.1, 50, 8, zeta=_zero_zeta(50))
    assert np.all(rep.partial_sums == 0) and rep.cauchy


def test_tk_condition_golden():
    g = float(lyapunov(1, 0))
    rep = check_tk_condition(1, 0, GOLDEN, 0, g / 4, 300, 20)
    assert rep.cauchy
    assert np.all(rep.increments[-30:] < 1e-8)
    bounds = [2 / GOLDEN.q(n) for n in range(20)]
    assert all(m <= b + 1e-15 for m, b in zip(rep.max_tk_residual, bounds))
    tail = rep.max_tk_residual[2:]
    assert all(b < a for a, b in zip(tail, tail[1:]))
    with pytest.raises(ValueError):
        check_tk_condition(1, 0, GOLDEN, 0, g, 10, 5)


def test_support_membership_lattice():
    for r in quantized_eigenvalues(1, GOLDEN, 0, range(-3, 4)):
        st = support_membership(1, GOLDEN, 0, r.e, 30, k=r.k_target)
        for n, t in enumerate(st.trace):
            assert t <= abs(r.m) * abs(float(GOLDEN.residual(GOLDEN.q(n)))) * (1 + 1e-12) + 1e-300
        assert st.in_support


def test_support_membership_zero_energy():
    st = support_membership(1, GOLDEN, 0, 0.0, 25)
    assert all(t == 0 for t in st.trace) and st.in_support


def test_support_membership_off_lattice():
    rng = np.random.default_rng(4)
    for e in rng.uniform(-3, 3, 20):
        st = support_membership(1, GOLDEN, Fraction(1, 7), float(e), 30)
        assert not st.in_support


def test_apply_operator_matches_definition():
    u = np.zeros(21, dtype=complex)
    u[10] = 1
    out = apply_operator(1.0, GOLDEN, Fraction(1, 10), u, 10, 0.5)
    assert out[9] == 1 and out[11] == 1
    assert out[10] == pytest.approx(math.tan(0.1 * math.pi) - 0.5)
