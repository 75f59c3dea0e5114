"""Even and odd circular states.

A circular state superposes N coherent states |alpha_k>, alpha_k =
alpha0 exp(2 pi i k / N), with coefficients C_k = 1 (even family) or
C_k = exp(2 pi i k / N) (odd family).  The even family is supported on
n = 0 mod N, the odd family on n = N - 1 mod N.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import DegenerateState, TruncationTooSmall
from .fock import (
    DEFAULT_POLICY,
    FockVector,
    TruncationPolicy,
    choose_dim,
)


class Parity(enum.Enum):
    EVEN = "even"
    ODD = "odd"


@dataclass(frozen=True)
class CircularSpec:
    N: int
    parity: Parity = Parity.EVEN
    alpha0: complex = 1.0

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.parity is Parity.ODD and self.N % 2:
            raise ValueError("the odd family is defined for even N only")
        object.__setattr__(self, "alpha0", complex(self.alpha0))

    @classmethod
    def from_a(cls, N: int, a: float, parity: Parity = Parity.EVEN) -> "CircularSpec":
        """Spec with real positive alpha0 = sqrt(a)."""
        return cls(N, parity, math.sqrt(a))

    @property
    def r(self) -> float:
        return abs(self.alpha0)

    @property
    def a(self) -> float:
        return abs(self.alpha0) ** 2

    def amplitudes(self) -> list[complex]:
        return [self.alpha0 * cmath.exp(2j * math.pi * k / self.N) for k in range(self.N)]

    def coefficients(self) -> list[complex]:
        if self.parity is Parity.EVEN:
            return [1.0 + 0j] * self.N
        return [cmath.exp(2j * math.pi * k / self.N) for k in range(self.N)]

    def support_residue(self) -> int:
        return 0 if self.parity is Parity.EVEN else self.N - 1


class TargetKind(enum.Enum):
    VACUUM = "vacuum"
    FOCK = "fock"
    TWO_FOCK = "two"


@dataclass(frozen=True)
class TargetSpec:
    """Vacuum, a Fock state |n1>, or (|n1> + |n2>)/sqrt(2)."""

    kind: TargetKind
    n1: int = 0
    n2: int | None = None

    def __post_init__(self):
        if self.kind is TargetKind.VACUUM and (self.n1 != 0 or self.n2 is not None):
            raise ValueError("vacuum target takes no indices")
        if self.n1 < 0:
            raise ValueError("Fock index must be >= 0")
        if self.kind is TargetKind.TWO_FOCK:
            if self.n2 is None or not self.n1 < self.n2:
                raise ValueError("two-Fock target needs n1 < n2")
        elif self.n2 is not None:
            raise ValueError(f"{self.kind.value} target takes a single index")

    @classmethod
    def vacuum(cls):
        return cls(TargetKind.VACUUM)

    @classmethod
    def fock(cls, n: int):
        return cls(TargetKind.FOCK, n)

    @classmethod
    def two_fock(cls, n1: int, n2: int):
        return cls(TargetKind.TWO_FOCK, n1, n2)

    @property
    def max_index(self) -> int:
        return self.n2 if self.kind is TargetKind.TWO_FOCK else self.n1

    def weights(self) -> dict[int, float]:
        if self.kind is TargetKind.TWO_FOCK:
            return {self.n1: 1 / math.sqrt(2), self.n2: 1 / math.sqrt(2)}
        return {self.n1: 1.0}

    def label(self) -> str:
        if self.kind is TargetKind.TWO_FOCK:
            return f"(|{self.n1}>+|{self.n2}>)/sqrt2"
        return f"|{self.n1}>"

    @classmethod
    def parse(cls, text: str) -> "TargetSpec":
        """Parse ``vacuum``, ``fock:8`` or ``two:0,16``."""
        kind, _, rest = text.strip().lower().partition(":")
        if kind == "vacuum" and not rest:
            return cls.vacuum()
        if kind == "fock":
            return cls.fock(int(rest))
        if kind == "two":
            n1, n2 = (int(x) for x in rest.split(","))
            return cls.two_fock(n1, n2)
        raise ValueError(f"cannot parse target {text!r}")


# ---------------------------------------------------------------------------
# state vectors


def circular_state(
    spec: CircularSpec, dim: int | None = None, policy: TruncationPolicy = DEFAULT_POLICY
) -> FockVector:
    """Normalized sum_k C_k |alpha_k> in a ``dim``-level space.

    With <n|alpha_k> = <n|alpha0> w^(kn), w = exp(2 pi i/N), the sum over k
    of C_k w^(kn) is N on the family's residue class and 0 elsewhere, so
    the state is <n|alpha0> restricted to that class and renormalized.
    Doing this in log-magnitude form avoids the cancellation a literal
    superposition suffers when lambda_N / N^2 is small.  The n = 0 amplitude
    of an even state is real positive, as is the n = N-1 amplitude of an odd
    state when alpha0 is real positive.
    """
    if dim is None:
        dim = circular_dim(spec, policy)
    tail = circular_tail(spec, dim)
    if tail >= policy.tail_tol:
        raise TruncationTooSmall(tail, dim)
    n = np.arange(spec.support_residue(), dim, spec.N)
    amps = np.zeros(dim, dtype=complex)
    if spec.r == 0.0:
        amps[0] = 1.0
        return FockVector(amps)
    log_mag = n * math.log(spec.r) - 0.5 * gammaln(n + 1)
    log_mag -= 0.5 * logsumexp(2.0 * log_mag)
    amps[n] = np.exp(log_mag + 1j * n * cmath.phase(spec.alpha0))
    return FockVector(amps)


def circular_tail(spec: CircularSpec, dim: int) -> float:
    """Probability the normalized circular state puts at n >= dim."""
    ms, p = _distribution(spec.N, spec.parity, spec.a)
    return float(p[ms >= dim].sum())


def circular_dim(spec: CircularSpec, policy: TruncationPolicy = DEFAULT_POLICY) -> int:
    """Smallest dim >= choose_dim(r) that holds all but ``tail_tol`` of the state.

    The coherent cutoff alone is too small for odd states whose support
    starts at n = N-1 beyond it.
    """
    ms, p = _distribution(spec.N, spec.parity, spec.a)
    dim = choose_dim(spec.r, policy)
    tails = np.cumsum(p[::-1])[::-1]  # tails[i] = mass at ms[i] and above
    for m, t in zip(ms, tails):
        if t < policy.tail_tol:
            break
        dim = max(dim, int(m) + 1)
    return dim


def gram_sum(spec: CircularSpec) -> float:
    """sum_{j,k} conj(C_j) C_k <alpha_j|alpha_k> from exact coherent overlaps."""
    alphas = np.array(spec.amplitudes())
    coeffs = np.array(spec.coefficients())
    aj = alphas[:, None]
    ak = alphas[None, :]
    overlaps = np.exp(-0.5 * abs(aj) ** 2 - 0.5 * abs(ak) ** 2 + np.conj(aj) * ak)
    return float(np.real(np.conj(coeffs) @ overlaps @ coeffs))


# ---------------------------------------------------------------------------
# closed forms


def lambda_norm(N: int, parity: Parity, r2: float) -> float:
    """Closed-form normalization lambda_N (the squared norm of sum_k C_k|alpha_k>)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if r2 < 0:
        raise ValueError("r2 must be >= 0")
    k = np.arange(1, N)
    damp = np.exp(-2.0 * r2 * np.sin(np.pi * k / N) ** 2)
    phase = r2 * np.sin(2.0 * np.pi * k / N)
    if parity is Parity.ODD:
        phase = phase + 2.0 * np.pi * k / N
    return float(N + 2.0 * np.sum(k * damp * np.cos(phase)))


def _support(N: int, parity: Parity):
    m = 0 if parity is Parity.EVEN else N - 1
    while True:
        yield m
        m += N


def _log_term(m: int, y: float) -> float:
    if m == 0:
        return 0.0
    return m * math.log(y) - math.lgamma(m + 1)


def partition(N: int, parity: Parity, y: float) -> float:
    """Z_N(y): sum of y^m / m! over the family's support m."""
    if y < 0:
        raise ValueError("y must be >= 0")
    if N < 1 or (parity is Parity.ODD and N < 2):
        raise ValueError("partition needs N >= 1 (even) or N >= 2 (odd)")
    if y == 0.0:
        return 1.0 if parity is Parity.EVEN else 0.0
    # multiplicative recurrence t_{m+N} = t_m y^N / ((m+1)...(m+N)); exp of a
    # log-term loses |log t| * eps, which is ~1e-14 already at y ~ 80
    m = 0 if parity is Parity.EVEN else N - 1
    t = 1.0
    for j in range(1, m + 1):
        t *= y / j
    terms = [t]
    total = t
    while True:
        for j in range(1, N + 1):
            t *= y / (m + j)
        m += N
        terms.append(t)
        total += t
        # terms rise until m ~ y, then decay factorially
        if m > y and t <= 1e-17 * total:
            break
    return math.fsum(terms)


def _distribution(N: int, parity: Parity, r2: float, tol: float = 1e-17):
    """Support indices and normalized probabilities, summed to ``tol``."""
    if r2 < 0:
        raise ValueError("r2 must be >= 0")
    if r2 == 0.0:
        if parity is Parity.ODD:
            raise DegenerateState("odd circular state at a=0 has zero norm")
        return np.array([0]), np.array([1.0])
    ms, logs = [], []
    peak = -math.inf
    for m in _support(N, parity):
        lt = _log_term(m, r2)
        peak = max(peak, lt)
        ms.append(m)
        logs.append(lt)
        if m > r2 and lt - peak < math.log(tol):
            break
    logs = np.array(logs)
    w = np.exp(logs - logs.max())
    return np.array(ms), w / w.sum()


def fock_probability(N: int, parity: Parity, r2: float, n: int) -> float:
    """P_n = |<n|Psi>|^2 from the partition-function form."""
    if n < 0:
        return 0.0
    residue = 0 if parity is Parity.EVEN else N - 1
    if n % N != residue:
        return 0.0
    if r2 == 0.0:
        if parity is Parity.ODD:
            raise DegenerateState("odd circular state at a=0 has zero norm")
        return 1.0 if n == 0 else 0.0
    log_z = math.log(partition(N, parity, r2))
    return math.exp(_log_term(n, r2) - log_z)


def fock_distribution(N: int, parity: Parity, r2: float, dim: int) -> np.ndarray:
    """Array of P_n for n < dim."""
    ms, p = _distribution(N, parity, r2)
    out = np.zeros(dim)
    keep = ms < dim
    out[ms[keep]] = p[keep]
    return out


def moments_from_partition(N: int, parity: Parity, y: float, k: int) -> float:
    """<n^k> as the weighted series sum_n n^k P_n."""
    if k < 0:
        raise ValueError("k must be >= 0")
    ms, p = _distribution(N, parity, y)
    return float(np.sum(ms.astype(float) ** k * p))


def variance_from_partition(N: int, parity: Parity, y: float) -> float:
    ms, p = _distribution(N, parity, y)
    mean = np.sum(ms * p)
    return float(np.sum((ms - mean) ** 2 * p))


# ---------------------------------------------------------------------------
# interference regimes


class Regime(enum.Enum):
    VACUUM = "vacuum"
    FOCK_N = "fock_N"
    ZERO_PLUS_N = "zero_plus_N"
    N_PLUS_2N = "N_plus_2N"
    MIXED = "mixed"


@dataclass(frozen=True)
class RegimeThresholds:
    t_small: float = 0.1
    t_large: float = 10.0
    band: tuple[float, float] = (0.75, 4.0 / 3.0)


@dataclass(frozen=True)
class RegimeReport:
    N: int
    r2: float
    x1: float
    x2: float
    x3: float
    tag: Regime


def classify_regime(
    N: int, r2: float, thresholds: RegimeThresholds = RegimeThresholds()
) -> RegimeReport:
    """Tag the interference regime of an even circular state.

    Ratios: x1 = (e r2/N)^N, x2 = e r2/N, x3 = e r2/(4N).  The two-Fock
    bands are tested before the Fock-N window, since x1 > t_large also
    holds near x2 ~ 1 for large N.
    """
    if N < 2:
        raise ValueError("N must be >= 2")
    x2 = math.e * r2 / N
    x3 = x2 / 4.0
    x1 = x2**N
    lo, hi = thresholds.band
    if x1 < thresholds.t_small:
        tag = Regime.VACUUM
    elif lo <= x2 <= hi:
        tag = Regime.ZERO_PLUS_N
    elif lo <= x3 <= hi:
        tag = Regime.N_PLUS_2N
    elif thresholds.t_large < x1 < 4.0**N:
        tag = Regime.FOCK_N
    else:
        tag = Regime.MIXED
    return RegimeReport(N, r2, x1, x2, x3, tag)


# ---------------------------------------------------------------------------
# overlaps with simple targets


def _overlap_from_moduli(moduli, target: TargetSpec) -> float:
    amp = sum(w * moduli[n] for n, w in target.weights().items())
    return float(amp**2)


def target_overlap(
    spec: CircularSpec, target: TargetSpec, dim: int | None = None,
    policy: TruncationPolicy = DEFAULT_POLICY,
) -> float:
    """|<target|Psi>|^2 built from the state vector's Fock amplitude moduli."""
    if dim is None:
        dim = max(circular_dim(spec, policy), target.max_index + 1)
    if target.max_index >= dim:
        raise ValueError(f"target index {target.max_index} outside dim={dim}")
    psi = circular_state(spec, dim, policy)
    return _overlap_from_moduli(np.abs(psi.amps), target)


def target_overlap_analytic(N: int, parity: Parity, r2: float, target: TargetSpec) -> float:
    """Same overlap computed from the partition-function distribution."""
    moduli = {n: math.sqrt(fock_probability(N, parity, r2, n)) for n in target.weights()}
    return _overlap_from_moduli(moduli, target)
