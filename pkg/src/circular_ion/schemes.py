"""Post-selected pulse sequences that grow circular states.

Every scheme starts from |alpha0> (x) |up> and repeats M cycles; a cycle
ends with a no-fluorescence measurement that keeps the |up> branch.

* S1: Kerr pulse t_k = pi / (2^k Omega_bar), then measure.  Yields the
  even circular state with N = 2^M.
* S2: rotation t'_l, Kerr pulse tau = pi / ((M+1) Omega_bar), measure.
  Yields the even circular state with N = M + 1.
* S3: rotation t'_k = pi / (2^k Lambda) under -Lambda sigma_x, Kerr pulse
  t_k, measure.  Yields the odd circular state with N = 2^M.
"""

from __future__ import annotations

import cmath
import enum
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .circular import CircularSpec, Parity, circular_dim, circular_state
from .errors import DegenerateState
from .fock import DEFAULT_POLICY, FockVector, TruncationPolicy, choose_dim, inner_product
from .ion import (
    DEFAULT_OMEGA,
    HamiltonianKind,
    IonState,
    LaserParams,
    build_hamiltonian,
    evolve_dense,
    kerr_evolve,
    kerr_validity,
    measure_up,
    rotate_pulse,
    rotation_hamiltonian,
)

MAX_CYCLES = 8
DEFAULT_MEASUREMENT_OVERHEAD = 0.2  # us per measurement


class Scheme(enum.Enum):
    S1 = 1
    S2 = 2
    S3 = 3


class Mode(enum.Enum):
    CLOSED_FORM = "closed"
    DENSE = "dense"


@dataclass(frozen=True)
class Evolve:
    """Kerr pulse.  ``rabi_phase`` is Omega * duration reduced mod 2 pi when
    the plan fixes it exactly; None means compute it from the duration."""

    duration: float
    rabi_phase: float | None = None


@dataclass(frozen=True)
class Rotate:
    duration: float
    sign: int = +1


@dataclass(frozen=True)
class Measure:
    pass


Step = Evolve | Rotate | Measure


@dataclass(frozen=True)
class PulseSequence:
    """An ordered pulse/measurement plan.

    The circular state it should produce is described by ``target_N``,
    ``target_parity`` and ``target_rotation``: for an initial amplitude
    alpha0 the components sit at alpha0 exp(i target_rotation) times the
    N-th roots of unity (see ``target_for``).
    """

    scheme: Scheme
    M: int
    pulses: tuple
    params: LaserParams
    target_N: int
    target_parity: Parity
    target_rotation: float
    planned_total_time: float

    def target_for(self, alpha0: complex) -> CircularSpec:
        return CircularSpec(
            self.target_N, self.target_parity, complex(alpha0) * cmath.exp(1j * self.target_rotation)
        )

    @property
    def n_measurements(self) -> int:
        return sum(isinstance(p, Measure) for p in self.pulses)

    def evolve_durations(self) -> list[float]:
        return [p.duration for p in self.pulses if isinstance(p, Evolve)]

    def rotate_durations(self) -> list[float]:
        return [p.duration for p in self.pulses if isinstance(p, Rotate)]


def _check_cycles(M: int):
    if not 1 <= M <= MAX_CYCLES:
        raise ValueError(f"M must lie in 1..{MAX_CYCLES}, got {M}")


def _sum_durations(pulses) -> float:
    return math.fsum(p.duration for p in pulses if not isinstance(p, Measure))


def scheme1_plan(M: int, Omega: float = DEFAULT_OMEGA, eta_override: float | None = None) -> PulseSequence:
    """M cycles of Evolve(t_k) -> Measure with eta^2 = 2^-(M+1) unless overridden."""
    _check_cycles(M)
    eta = eta_override if eta_override is not None else 2.0 ** (-(M + 1) / 2)
    params = LaserParams(Omega=Omega, eta=eta)
    pulses = []
    # with the default eta, Omega t_k = 2 pi 2^(M-k): whole Rabi periods
    whole = 0.0 if eta_override is None else None
    for k in range(1, M + 1):
        pulses += [Evolve(math.pi / (2**k * params.Omega_bar), whole), Measure()]
    N = 2**M
    return PulseSequence(
        Scheme.S1, M, tuple(pulses), params, N, Parity.EVEN, math.pi / N, _sum_durations(pulses)
    )


def scheme2_roots(M: int) -> list[complex]:
    """z_l = exp(i pi + 2 pi i l/(M+1)), l = 1..M: the roots of sum_k (-1)^(M-k) z^k."""
    if M < 1:
        raise ValueError("M must be >= 1")
    return [_turn(Fraction(1, 2) + Fraction(l, M + 1)) for l in range(1, M + 1)]


_QUARTER_TURNS = (1 + 0j, 1j, -1 + 0j, -1j)


def _turn(q: Fraction) -> complex:
    """exp(2 pi i q), exact at multiples of a quarter turn."""
    q %= 1
    if (4 * q).denominator == 1:
        return _QUARTER_TURNS[int(4 * q)]
    return cmath.exp(2j * math.pi * float(q))


def scheme2_rotation_times(M: int, Lambda: float) -> list[float]:
    """t'_l = (l/(M+1) + 1/2) pi / Lambda, so that exp(2 i Lambda t'_l) = z_l."""
    return [(l / (M + 1) + 0.5) * math.pi / Lambda for l in range(1, M + 1)]


def scheme2_plan(
    M: int,
    Omega: float = DEFAULT_OMEGA,
    Lambda: float | None = None,
    root_order: list[int] | None = None,
) -> PulseSequence:
    """M cycles of Rotate(t'_l, +) -> Evolve(tau) -> Measure.

    ``root_order`` permutes which root (1-based l) is used in which cycle;
    the default is ascending l.
    """
    _check_cycles(M)
    params = LaserParams(Omega=Omega, eta=1.0 / math.sqrt(2.0 * (M + 1)), Lambda=Lambda)
    tau = math.pi / ((M + 1) * params.Omega_bar)
    # eta^2 = 1/(2(M+1)) makes every Kerr pulse a whole number of Rabi periods
    assert math.isclose(params.Omega * tau, 2.0 * math.pi, rel_tol=1e-12)
    times = scheme2_rotation_times(M, params.Lambda)
    order = list(range(1, M + 1)) if root_order is None else list(root_order)
    if sorted(order) != list(range(1, M + 1)):
        raise ValueError("root_order must be a permutation of 1..M")
    pulses = []
    for l in order:
        pulses += [Rotate(times[l - 1], +1), Evolve(tau, 0.0), Measure()]
    N = M + 1
    return PulseSequence(
        Scheme.S2, M, tuple(pulses), params, N, Parity.EVEN, math.pi * M / N, _sum_durations(pulses)
    )


def scheme3_plan(M: int, Omega: float = DEFAULT_OMEGA, Lambda: float | None = None) -> PulseSequence:
    """M cycles of Rotate(pi/(2^k Lambda), -) -> Evolve(t_k) -> Measure."""
    _check_cycles(M)
    params = LaserParams(Omega=Omega, eta=2.0 ** (-(M + 1) / 2), Lambda=Lambda)
    pulses = []
    for k in range(1, M + 1):
        pulses += [
            Rotate(math.pi / (2**k * params.Lambda), -1),
            Evolve(math.pi / (2**k * params.Omega_bar), 0.0),
            Measure(),
        ]
    N = 2**M
    return PulseSequence(
        Scheme.S3, M, tuple(pulses), params, N, Parity.ODD, math.pi / N, _sum_durations(pulses)
    )


def make_plan(scheme: Scheme, M: int, Omega: float = DEFAULT_OMEGA, Lambda: float | None = None,
              eta_override: float | None = None) -> PulseSequence:
    if scheme is Scheme.S1:
        return scheme1_plan(M, Omega, eta_override)
    if eta_override is not None:
        raise ValueError("eta can only be overridden for scheme 1")
    if scheme is Scheme.S2:
        return scheme2_plan(M, Omega, Lambda)
    return scheme3_plan(M, Omega, Lambda)


# ---------------------------------------------------------------------------
# closed-form probabilities


def success_probability(scheme: Scheme, M: int, r2: float) -> float:
    """Probability that all M measurements show no fluorescence."""
    if r2 < 0:
        raise ValueError("r2 must be >= 0")
    if scheme is Scheme.S2:
        n = M + 1
        k = np.arange(1, M + 1)
        s = np.sum(k * np.exp(-2 * r2 * np.sin(np.pi * k / n) ** 2)
                   * np.cos(r2 * np.sin(2 * np.pi * k / n)))
        return float((n + 2 * s) / 2.0 ** (2 * M))
    N = 2**M
    k = np.arange(1, N)
    damp = np.exp(-2 * r2 * np.sin(np.pi * k / N) ** 2)
    if scheme is Scheme.S1:
        osc = np.cos(r2 * np.sin(np.pi * k / 2 ** (M - 1)))
    else:
        osc = np.cos(2 * np.pi * k / N + r2 * np.sin(2 * np.pi * k / N))
    return float((1 + np.sum(k * damp * osc) / 2.0 ** (M - 1)) / 2.0**M)


def per_cycle_probability_s1(r2: float, cycle_times, Omega: float, eta: float) -> float:
    """Joint no-fluorescence probability after Kerr pulses of the given durations.

    The post-selected motional state is 2^-m sum_s exp(-i Omega T_s)
    |alpha0 exp(i Omega_bar T_s)> with T_s = sum_k s_k t_k, s_k = +-1, so

        P = 4^-m sum_{s,s'} exp(-r2 (1 - cos Omega_bar D)) cos(r2 sin Omega_bar D - Omega D),

    D = T_s' - T_s.  One pulse gives (1 + g(t1))/2; two pulses give
    (1 + g(t1) + g(t2) + [g(t1+t2) + g(t1-t2)]/2)/4 with
    g(t) = exp(-r2 (1 - cos 2 Omega_bar t)) cos(r2 sin 2 Omega_bar t - 2 Omega t).
    """
    times = np.asarray(list(cycle_times), dtype=float)
    if times.size == 0:
        return 1.0
    if np.any(times <= 0):
        raise ValueError("pulse durations must be positive")
    omega_bar = eta**2 * Omega
    signs = np.array(list(itertools.product((1.0, -1.0), repeat=times.size)))
    T = signs @ times
    D = T[None, :] - T[:, None]
    terms = np.exp(-r2 * (1 - np.cos(omega_bar * D))) * np.cos(r2 * np.sin(omega_bar * D) - Omega * D)
    return float(terms.sum() / 4.0**times.size)


# ---------------------------------------------------------------------------
# execution


@dataclass
class RunResult:
    scheme: Scheme
    M: int
    alpha0: complex
    cycle_probs: list[float]
    joint_prob: float
    final_motional: FockVector
    fidelity_to_target: float
    analytic_joint_prob: float
    validity_metric: float
    dim: int
    mode: Mode = Mode.CLOSED_FORM
    hamiltonian: HamiltonianKind = HamiltonianKind.KERR
    planned_total_time: float = 0.0
    final_ion: IonState | None = field(default=None, repr=False)

    def as_dict(self) -> dict:
        return {
            "scheme": self.scheme.value,
            "M": self.M,
            "r": abs(self.alpha0),
            "a": abs(self.alpha0) ** 2,
            "mode": self.mode.value,
            "hamiltonian": self.hamiltonian.value,
            "dim": self.dim,
            "cycle_probs": list(self.cycle_probs),
            "joint_prob": self.joint_prob,
            "analytic_joint_prob": self.analytic_joint_prob,
            "fidelity_to_target": self.fidelity_to_target,
            "validity_metric": self.validity_metric,
            "planned_total_time_us": self.planned_total_time,
        }


def _uses_default_eta(plan: PulseSequence) -> bool:
    default = {Scheme.S1: 2.0 ** (-(plan.M + 1) / 2), Scheme.S3: 2.0 ** (-(plan.M + 1) / 2),
               Scheme.S2: 1.0 / math.sqrt(2.0 * (plan.M + 1))}[plan.scheme]
    return math.isclose(plan.params.eta, default, rel_tol=1e-14)


def analytic_joint_probability(plan: PulseSequence, r2: float) -> float:
    if _uses_default_eta(plan):
        return success_probability(plan.scheme, plan.M, r2)
    if plan.scheme is Scheme.S1:
        return per_cycle_probability_s1(r2, plan.evolve_durations(), plan.params.Omega, plan.params.eta)
    return float("nan")


def run_sequence(
    plan: PulseSequence,
    alpha0: complex,
    mode: Mode = Mode.CLOSED_FORM,
    hamiltonian: HamiltonianKind = HamiltonianKind.KERR,
    policy: TruncationPolicy = DEFAULT_POLICY,
    dim: int | None = None,
) -> RunResult:
    """Apply ``plan`` to |alpha0> (x) |up>, keeping the no-fluorescence branch.

    CLOSED_FORM uses the diagonal Kerr propagator and 2x2 rotations; DENSE
    exponentiates the chosen Hamiltonian (KERR or CARRIER) and the rotation
    generator as full matrices.
    """
    alpha0 = complex(alpha0)
    if mode is Mode.CLOSED_FORM and hamiltonian is not HamiltonianKind.KERR:
        raise ValueError("the closed-form path only exists for the Kerr Hamiltonian")
    if hamiltonian not in (HamiltonianKind.KERR, HamiltonianKind.CARRIER):
        raise ValueError("schemes drive the carrier; use KERR or CARRIER")
    if dim is None:
        try:
            dim = circular_dim(plan.target_for(alpha0), policy)
        except DegenerateState:
            # odd target at alpha0 = 0; the first measurement reports it
            dim = choose_dim(abs(alpha0), policy)
    state = IonState.coherent_up(alpha0, dim)
    validity = kerr_validity(state.up, plan.params.eta)

    H = None
    rot_H = {}
    if mode is Mode.DENSE:
        H = build_hamiltonian(hamiltonian, plan.params, dim)

    probs = []
    for step in plan.pulses:
        if isinstance(step, Evolve):
            if mode is Mode.DENSE:
                state = evolve_dense(state, H, step.duration)
            else:
                state = kerr_evolve(state, step.duration, plan.params, step.rabi_phase)
        elif isinstance(step, Rotate):
            if mode is Mode.DENSE:
                if step.sign not in rot_H:
                    rot_H[step.sign] = rotation_hamiltonian(plan.params.Lambda, dim, step.sign)
                state = evolve_dense(state, rot_H[step.sign], step.duration)
            else:
                state = rotate_pulse(state, step.duration, plan.params.Lambda, step.sign)
        else:
            p, state = measure_up(state)
            probs.append(p)

    target = circular_state(plan.target_for(alpha0), dim, policy)
    fidelity = abs(inner_product(target, state.up)) ** 2
    return RunResult(
        scheme=plan.scheme,
        M=plan.M,
        alpha0=alpha0,
        cycle_probs=probs,
        joint_prob=float(np.prod(probs)),
        final_motional=state.up,
        fidelity_to_target=min(1.0, fidelity),
        analytic_joint_prob=analytic_joint_probability(plan, abs(alpha0) ** 2),
        validity_metric=validity,
        dim=dim,
        mode=mode,
        hamiltonian=hamiltonian,
        planned_total_time=plan.planned_total_time,
        final_ion=state,
    )


def total_time(plan: PulseSequence, measurement_overhead: float = DEFAULT_MEASUREMENT_OVERHEAD):
    """(pulse time + M * overhead, overhead share of that total), in us."""
    if measurement_overhead < 0:
        raise ValueError("measurement overhead must be >= 0")
    overhead = plan.n_measurements * measurement_overhead
    total = plan.planned_total_time + overhead
    return total, (overhead / total if total > 0 else 0.0)


def s1_phase_grid(M: int, theta0: float = 0.0) -> list[float]:
    """Phases theta0 +- pi (2k-1)/2^M, k = 1..2^(M-1), of the S1 components."""
    N = 2**M
    out = []
    for k in range(1, N // 2 + 1):
        out += [theta0 + math.pi * (2 * k - 1) / N, theta0 - math.pi * (2 * k - 1) / N]
    return out
