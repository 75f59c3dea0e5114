import cmath
import itertools
import math

import numpy as np
import pytest

from circular_ion.circular import CircularSpec, Parity, circular_state, gram_sum, lambda_norm
from circular_ion.errors import TruncationTooSmall, ZeroProbabilityBranch
from circular_ion.fock import FockVector, coherent_state, inner_product
from circular_ion.ion import HamiltonianKind, LaserParams
from circular_ion.schemes import (
    Evolve,
    Measure,
    Mode,
    PulseSequence,
    Rotate,
    Scheme,
    make_plan,
    per_cycle_probability_s1,
    run_sequence,
    s1_phase_grid,
    scheme1_plan,
    scheme2_plan,
    scheme2_roots,
    scheme2_rotation_times,
    scheme3_plan,
    success_probability,
    total_time,
)

TWO_PI = 2 * math.pi


def lam_over_4M(scheme, M, r2):
    if scheme is Scheme.S1:
        return lambda_norm(2**M, Parity.EVEN, r2) / 4**M
    if scheme is Scheme.S2:
        return lambda_norm(M + 1, Parity.EVEN, r2) / 4**M
    return lambda_norm(2**M, Parity.ODD, r2) / 4**M


# --- plans ----------------------------------------------------------------------


def test_s1_plan_structure():
    plan = scheme1_plan(4)
    assert [type(p) for p in plan.pulses] == [Evolve, Measure] * 4
    ob = plan.params.Omega_bar
    assert plan.evolve_durations() == pytest.approx([math.pi / (2**k * ob) for k in range(1, 5)])
    assert plan.target_N == 16 and plan.target_parity is Parity.EVEN


def test_s1_total_time_fifteen():
    plan = scheme1_plan(4, Omega=TWO_PI)
    assert plan.planned_total_time == pytest.approx(15.0, abs=1e-12)
    assert plan.planned_total_time == pytest.approx((2**4 - 1) * TWO_PI / plan.params.Omega)


def test_s1_eta_value():
    assert scheme1_plan(4).params.eta == pytest.approx(2**-2.5)
    assert round(scheme1_plan(4).params.eta, 2) == 0.18


def test_s1_base_case():
    plan = scheme1_plan(1)
    assert plan.evolve_durations() == pytest.approx([math.pi / (2 * plan.params.Omega_bar)])
    assert plan.target_N == 2 and plan.n_measurements == 1


@pytest.mark.parametrize("M", [0, 9])
def test_cycle_guard(M):
    with pytest.raises(ValueError):
        scheme1_plan(M)


@pytest.mark.parametrize("M", range(1, 9))
def test_s1_pulses_are_whole_rabi_periods(M):
    plan = scheme1_plan(M)
    for t in plan.evolve_durations():
        k = plan.params.Omega * t / TWO_PI
        assert k == pytest.approx(round(k), abs=1e-9)


@pytest.mark.parametrize("scheme", list(Scheme))
@pytest.mark.parametrize("M", range(1, 9))
def test_exact_rabi_phase_is_consistent(scheme, M):
    plan = make_plan(scheme, M)
    for step in plan.pulses:
        if isinstance(step, Evolve):
            assert step.rabi_phase == 0.0
            phase = plan.params.Omega * step.duration
            assert abs(phase - TWO_PI * round(phase / TWO_PI)) <= 1e-12


def test_overridden_eta_computes_rabi_phase():
    assert all(p.rabi_phase is None for p in make_plan(Scheme.S1, 2, eta_override=0.125).pulses
               if isinstance(p, Evolve))


@pytest.mark.parametrize("M", range(1, 9))
def test_s2_plan(M):
    plan = scheme2_plan(M)
    assert [type(p) for p in plan.pulses] == [Rotate, Evolve, Measure] * M
    assert all(p.sign == 1 for p in plan.pulses if isinstance(p, Rotate))
    taus = plan.evolve_durations()
    assert taus == pytest.approx([taus[0]] * M)
    assert plan.params.Omega * taus[0] == pytest.approx(TWO_PI, rel=1e-12)
    om, lam = plan.params.Omega, plan.params.Lambda
    assert plan.planned_total_time == pytest.approx(M * (TWO_PI / om + math.pi / lam))
    assert plan.target_N == M + 1


def test_s2_total_time_fifteen_cycles():
    # plans stop at 8 cycles; the duration formulas themselves are checked at M = 15
    M, om, lam = 15, TWO_PI, 0.3
    eta2 = 1 / (2 * (M + 1))
    tau = math.pi / ((M + 1) * eta2 * om)
    total = M * tau + math.fsum(scheme2_rotation_times(M, lam))
    assert total == pytest.approx(15 * (TWO_PI / om + math.pi / lam))


def test_s2_rotation_times_hit_roots():
    M, lam = 5, 0.7
    for t, z in zip(scheme2_rotation_times(M, lam), scheme2_roots(M)):
        assert cmath.exp(2j * lam * t) == pytest.approx(z, abs=1e-12)


def test_s2_root_order_validation():
    with pytest.raises(ValueError):
        scheme2_plan(3, root_order=[1, 1, 2])


@pytest.mark.parametrize("M", range(1, 9))
def test_s3_plan(M):
    plan = scheme3_plan(M)
    assert [type(p) for p in plan.pulses] == [Rotate, Evolve, Measure] * M
    assert all(p.sign == -1 for p in plan.pulses if isinstance(p, Rotate))
    lam, ob = plan.params.Lambda, plan.params.Omega_bar
    assert plan.rotate_durations() == pytest.approx([math.pi / (2**k * lam) for k in range(1, M + 1)])
    assert plan.evolve_durations() == pytest.approx([math.pi / (2**k * ob) for k in range(1, M + 1)])
    om = plan.params.Omega
    assert plan.planned_total_time == pytest.approx((2**M - 1) * (TWO_PI / om + math.pi / (2**M * lam)))


def test_s3_total_time_m4():
    plan = scheme3_plan(4, Omega=TWO_PI, Lambda=0.2 * math.pi)
    assert plan.planned_total_time == pytest.approx(19.6875)
    assert total_time(plan, 0.2)[0] == pytest.approx(19.6875 + 0.8)


def test_s3_base_case():
    plan = scheme3_plan(1)
    assert len(plan.rotate_durations()) == 1 and len(plan.evolve_durations()) == 1
    assert plan.n_measurements == 1


def test_eta_override_only_scheme1():
    assert make_plan(Scheme.S1, 2, eta_override=0.125).params.eta == 0.125
    with pytest.raises(ValueError):
        make_plan(Scheme.S2, 2, eta_override=0.125)


# --- roots ----------------------------------------------------------------------


def test_roots_m3():
    roots = scheme2_roots(3)
    assert roots == pytest.approx([-1j, 1, 1j], abs=1e-15)


def test_roots_m3_exact():
    assert sorted(scheme2_roots(3), key=lambda z: z.imag) == [-1j, 1, 1j]


def test_roots_m1():
    assert scheme2_roots(1) == pytest.approx([1.0], abs=1e-15)


def test_roots_m2():
    got = sorted(scheme2_roots(2), key=lambda z: z.imag)
    assert got == pytest.approx([cmath.exp(-1j * math.pi / 3), cmath.exp(1j * math.pi / 3)], abs=1e-15)


@pytest.mark.parametrize("M", range(1, 9))
def test_roots_solve_polynomial(M):
    for z in scheme2_roots(M):
        value = sum((-1) ** (M - k) * z**k for k in range(M + 1))
        assert abs(value) <= 1e-12


@pytest.mark.parametrize("M", range(1, 9))
def test_elementary_symmetric_polynomials_are_one(M):
    # prod (x - z_l) = sum_j (-1)^j e_j x^(M-j)
    coeffs = np.poly(scheme2_roots(M))
    e = [(-1) ** j * coeffs[j] for j in range(1, M + 1)]
    assert np.max(np.abs(np.array(e) - 1)) <= 1e-10


# --- success probabilities ------------------------------------------------------


def test_s1_table_value():
    assert success_probability(Scheme.S1, 3, 6.80) == pytest.approx(0.12851, abs=1e-4)


@pytest.mark.parametrize("M", [1, 2, 3, 4])
def test_s1_vacuum_always_succeeds(M):
    assert success_probability(Scheme.S1, M, 0.0) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("M", [1, 2, 3, 4])
def test_s2_vacuum_probability(M):
    # Kerr pulses act trivially on |0>; each rotation keeps cos^2(Lambda t'_l) = sin^2(pi l/(M+1))
    want = math.prod(math.sin(math.pi * l / (M + 1)) ** 2 for l in range(1, M + 1))
    assert want == pytest.approx((M + 1) ** 2 / 4**M)
    assert success_probability(Scheme.S2, M, 0.0) == pytest.approx(want, abs=1e-12)
    assert run_sequence(scheme2_plan(M), 0.0).joint_prob == pytest.approx(want, abs=1e-12)


@pytest.mark.parametrize("scheme", list(Scheme))
@pytest.mark.parametrize("M", [1, 2, 3, 4, 5])
@pytest.mark.parametrize("r2", [0.5, 2.0, 6.8, 12.8])
def test_lambda_identity(scheme, M, r2):
    assert success_probability(scheme, M, r2) == pytest.approx(lam_over_4M(scheme, M, r2), abs=1e-12)


@pytest.mark.parametrize("r2", [400.0, 900.0])
def test_s2_fifteen_cycle_large_radius(r2):
    # cross terms are damped as exp(-2 r2 sin^2(pi/16)); the formula tends to (M+1)/4^M
    assert success_probability(Scheme.S2, 15, r2) == pytest.approx(16 / 2**30, rel=1e-6)


def test_success_rejects_negative():
    with pytest.raises(ValueError):
        success_probability(Scheme.S1, 2, -0.1)


# --- per-cycle law ----------------------------------------------------------------


@pytest.mark.parametrize("r", [0.5, 1.0, 2.0, 3.0])
def test_first_cycle_formula(r):
    plan = scheme1_plan(3)
    t1 = plan.evolve_durations()[0]
    got = per_cycle_probability_s1(r * r, [t1], plan.params.Omega, plan.params.eta)
    assert got == pytest.approx((1 + math.exp(-2 * r * r)) / 2, abs=1e-12)


@pytest.mark.parametrize("r", [0.5, 1.0, 2.0, 3.0])
def test_two_cycle_reduction(r):
    plan = scheme1_plan(3)
    t1, t2 = plan.evolve_durations()[:2]
    a = r * r
    want = 0.25 * (1 + math.exp(-2 * a) + 2 * math.exp(-a) * math.cos(a))
    got = per_cycle_probability_s1(a, [t1, t2], plan.params.Omega, plan.params.eta)
    assert got == pytest.approx(want, abs=1e-12)


def test_two_cycle_general_form():
    # (1 + g(t1) + g(t2) + [g(t1+t2) + g(t1-t2)]/2)/4 for arbitrary timings
    a, om, eta, t1, t2 = 1.3, 5.0, 0.3, 0.37, 0.81
    ob = eta**2 * om

    def g(t):
        return math.exp(-a * (1 - math.cos(2 * ob * t))) * math.cos(a * math.sin(2 * ob * t) - 2 * om * t)

    want = (1 + g(t1) + g(t2) + 0.5 * (g(t1 + t2) + g(t1 - t2))) / 4
    assert per_cycle_probability_s1(a, [t1, t2], om, eta) == pytest.approx(want, abs=1e-14)


def test_per_cycle_vacuum():
    plan = scheme1_plan(2)
    assert per_cycle_probability_s1(0.0, plan.evolve_durations(), plan.params.Omega, plan.params.eta) == \
        pytest.approx(1.0, abs=1e-12)


def _custom_s1(durations, Omega, eta):
    pulses = []
    for t in durations:
        pulses += [Evolve(t), Measure()]
    return PulseSequence(Scheme.S1, len(durations), tuple(pulses), LaserParams(Omega=Omega, eta=eta),
                         2, Parity.EVEN, 0.0, sum(durations))


@pytest.mark.parametrize("mode", list(Mode))
def test_generic_timing_matches_simulation(mode):
    # Omega_bar t1 = pi/3, Omega t1 = 10
    om = TWO_PI
    t1 = 10 / om
    eta = math.sqrt(math.pi / 30)
    plan = _custom_s1([t1], om, eta)
    res = run_sequence(plan, 1.0, mode)
    assert res.joint_prob == pytest.approx(per_cycle_probability_s1(1.0, [t1], om, eta), abs=1e-9)
    assert res.analytic_joint_prob == pytest.approx(res.joint_prob, abs=1e-9)


def test_generic_two_pulse_timing_matches_simulation():
    om, eta, ts = 3.0, 0.35, [0.4, 1.1]
    res = run_sequence(_custom_s1(ts, om, eta), 1.4 * cmath.exp(0.3j))
    assert res.joint_prob == pytest.approx(per_cycle_probability_s1(1.96, ts, om, eta), abs=1e-9)


def test_per_cycle_rejects_nonpositive():
    with pytest.raises(ValueError):
        per_cycle_probability_s1(1.0, [0.0], 1.0, 0.1)


# --- runs -----------------------------------------------------------------------


@pytest.mark.parametrize("r", [0.3, 1.0, 2.5])
def test_s1_single_cycle_run(r):
    res = run_sequence(scheme1_plan(1), r)
    assert res.cycle_probs == pytest.approx([(1 + math.exp(-2 * r * r)) / 2], abs=1e-12)


# S3 at M = 4, r = 0.5 keeps a branch of probability ~5e-22; float64 phase
# roundoff in the dense eigendecomposition (~1e-14 rad) then costs ~1e-7 fidelity
CONDITIONING_LIMITED = {(Scheme.S3, 4, 0.5)}
CASES = [
    pytest.param(s, M, r, marks=pytest.mark.xfail(reason="float64 conditioning of the dense path"))
    if (s, M, r) in CONDITIONING_LIMITED else (s, M, r)
    for s in Scheme for M in (1, 2, 3, 4) for r in (0.5, 1.5, 2.5, 4.0)
]


@pytest.mark.parametrize("scheme, M, r", CASES)
def test_closed_form_matches_formula_and_dense(scheme, M, r):
    plan = make_plan(scheme, M)
    closed = run_sequence(plan, r)
    dense = run_sequence(plan, r, Mode.DENSE, dim=closed.dim)
    assert closed.joint_prob == pytest.approx(success_probability(scheme, M, r * r), abs=1e-8)
    assert np.max(np.abs(np.subtract(closed.cycle_probs, dense.cycle_probs))) <= 1e-8
    assert abs(inner_product(closed.final_motional, dense.final_motional)) ** 2 >= 1 - 1e-9
    assert closed.fidelity_to_target >= 1 - 1e-9
    assert dense.fidelity_to_target >= 1 - 1e-9


def test_conditioning_limited_case_closed_form_is_exact():
    plan = make_plan(Scheme.S3, 4)
    closed = run_sequence(plan, 0.5)
    dense = run_sequence(plan, 0.5, Mode.DENSE, dim=closed.dim)
    assert closed.joint_prob < 1e-20
    assert closed.fidelity_to_target >= 1 - 1e-9
    assert np.max(np.abs(np.subtract(closed.cycle_probs, dense.cycle_probs))) <= 1e-8
    assert dense.fidelity_to_target >= 1 - 1e-5


@pytest.mark.parametrize("M", [1, 2, 3, 4, 5])
@pytest.mark.parametrize("r", [0.8, 2.0, 3.5])
def test_s2_target_fidelity(M, r):
    assert run_sequence(scheme2_plan(M), r).fidelity_to_target >= 1 - 1e-9


@pytest.mark.parametrize("scheme", [Scheme.S1, Scheme.S3])
@pytest.mark.parametrize("alpha0", [2.0 * cmath.exp(0.7j), -1.5j])
def test_complex_alpha_target(scheme, alpha0):
    assert run_sequence(make_plan(scheme, 3), alpha0).fidelity_to_target >= 1 - 1e-9


def test_s1_m4_example():
    res = run_sequence(scheme1_plan(4), 3.6)
    # the printed ~0.09 is not what this formula gives; see the acceptance suite
    assert res.joint_prob == pytest.approx(0.0712263, abs=1e-6)
    assert res.fidelity_to_target >= 0.999


def test_s3_m4_example():
    res = run_sequence(scheme3_plan(4), 4.0)
    assert 0.095 <= res.joint_prob <= 0.105
    assert int(np.argmax(res.final_motional.probabilities())) == 15


def test_validity_metric_reported():
    res = run_sequence(scheme1_plan(4), 3.6)
    assert res.validity_metric == pytest.approx((3.6**2 + 1) * 2**-5 / 4, rel=1e-8)


@pytest.mark.parametrize("M", [1, 2, 3, 4])
def test_s1_phase_placement(M):
    theta0 = 0.4
    alpha0 = 2.2 * cmath.exp(1j * theta0)
    res = run_sequence(scheme1_plan(M), alpha0)
    dim = res.dim
    placed = sum(coherent_state(abs(alpha0) * cmath.exp(1j * th), dim).amps for th in s1_phase_grid(M, theta0))
    placed = FockVector(placed / np.linalg.norm(placed))
    assert abs(inner_product(placed, res.final_motional)) ** 2 >= 1 - 1e-9


def test_phase_grid_size():
    assert len(s1_phase_grid(3)) == 8
    assert len(set(round(p % TWO_PI, 12) for p in s1_phase_grid(3))) == 8


@pytest.mark.parametrize("M", [2, 3, 4])
def test_s2_root_order_invariance(M):
    base = run_sequence(scheme2_plan(M), 1.7).final_motional
    for order in itertools.islice(itertools.permutations(range(1, M + 1)), 1, 7):
        other = run_sequence(scheme2_plan(M, root_order=list(order)), 1.7).final_motional
        assert abs(inner_product(base, other)) ** 2 >= 1 - 1e-9


def test_dense_carrier_requires_dense_mode():
    with pytest.raises(ValueError):
        run_sequence(scheme1_plan(2), 1.0, Mode.CLOSED_FORM, HamiltonianKind.CARRIER)


def test_odd_scheme_from_vacuum_has_no_success_branch():
    with pytest.raises(ZeroProbabilityBranch):
        run_sequence(scheme3_plan(2), 0.0)


def test_run_too_small_dim():
    with pytest.raises(TruncationTooSmall):
        run_sequence(scheme1_plan(2), 4.0, dim=12)


def test_run_result_as_dict():
    d = run_sequence(scheme1_plan(2), 1.0).as_dict()
    assert d["scheme"] == 1 and d["M"] == 2 and d["a"] == pytest.approx(1.0)
    assert len(d["cycle_probs"]) == 2


# --- timing ---------------------------------------------------------------------


def test_total_time_with_overhead():
    total, frac = total_time(scheme1_plan(4, TWO_PI), 0.2)
    assert total == pytest.approx(15.8)
    assert frac == pytest.approx(0.8 / 15.8)
    assert frac < 0.10


def test_total_time_without_overhead():
    plan = scheme2_plan(3)
    assert total_time(plan, 0.0) == (plan.planned_total_time, 0.0)


def test_total_time_rejects_negative():
    with pytest.raises(ValueError):
        total_time(scheme1_plan(1), -0.1)


def test_target_matches_state_builder():
    plan = scheme3_plan(3)
    spec = plan.target_for(2.0)
    assert spec == CircularSpec(8, Parity.ODD, 2.0 * cmath.exp(1j * math.pi / 8))
    assert gram_sum(spec) == pytest.approx(lambda_norm(8, Parity.ODD, 4.0), abs=1e-10)
    assert circular_state(spec).is_normalized()
