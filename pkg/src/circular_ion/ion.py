"""Two-level ion coupled to one motional mode.

Composite states are stored as a pair of motional vectors, one for each
electronic level.  Dense operators act on the stacked vector
``[up_0 .. up_{d-1}, down_0 .. down_{d-1}]``.

Units: time in microseconds, angular frequencies in rad/us.  With the
default Omega = 2 pi rad/us one Rabi period 2 pi/Omega is 1 us.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import hbar as HBAR_SI
from scipy.special import eval_genlaguerre

from .errors import (
    NonPositiveInput,
    NotHermitian,
    UnsupportedDetuning,
    ZeroProbabilityBranch,
)
from .fock import FockVector, coherent_state, number_moment, number_variance

DEFAULT_OMEGA = 2.0 * math.pi
HERMITIAN_TOL = 1e-10
ZERO_BRANCH_PROB = 1e-15


@dataclass(frozen=True)
class LaserParams:
    """Drive parameters.  ``Lambda`` defaults to Omega/10."""

    Omega: float = DEFAULT_OMEGA
    eta: float = 0.1
    Lambda: float | None = None
    phi: float = math.pi

    def __post_init__(self):
        if self.Lambda is None:
            object.__setattr__(self, "Lambda", self.Omega / 10.0)
        if self.Omega <= 0 or self.Lambda <= 0:
            raise ValueError("Omega and Lambda must be positive")
        if not 0.0 < self.eta < 1.0:
            raise ValueError(f"eta must lie in (0, 1), got {self.eta}")
        # the Kerr form below is derived for phi = pi only
        if not math.isclose(self.phi, math.pi, rel_tol=0, abs_tol=1e-12):
            raise ValueError("only the laser phase phi = pi is supported")

    @property
    def Omega_bar(self) -> float:
        return self.eta**2 * self.Omega

    def rotation_ratio(self, eta_r: float) -> float:
        """eta_r^2 Lambda / (eta^2 Omega); should be << 1 for the rotating pulses."""
        return eta_r**2 * self.Lambda / self.Omega_bar


@dataclass(frozen=True)
class IonState:
    up: FockVector
    down: FockVector

    def __post_init__(self):
        if self.up.dim != self.down.dim:
            raise ValueError("up and down components must share one truncation")

    @property
    def dim(self) -> int:
        return self.up.dim

    @property
    def norm_sq(self) -> float:
        return self.up.norm_sq + self.down.norm_sq

    @classmethod
    def from_arrays(cls, up, down) -> "IonState":
        return cls(FockVector(up), FockVector(down))

    @classmethod
    def coherent_up(cls, alpha: complex, dim: int) -> "IonState":
        """|alpha> (x) |up>, the initial state of every scheme."""
        return cls(coherent_state(alpha, dim), FockVector(np.zeros(dim)))

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.up.amps, self.down.amps])

    @classmethod
    def from_vector(cls, vec) -> "IonState":
        vec = np.asarray(vec, dtype=complex)
        half = vec.size // 2
        return cls.from_arrays(vec[:half], vec[half:])


# ---------------------------------------------------------------------------
# couplings


def lamb_dicke(delta_k: float, mass: float, omega: float, hbar: float = HBAR_SI) -> float:
    """eta = delta_k * sqrt(hbar / (2 m omega)), SI units."""
    for name, value in (("delta_k", delta_k), ("mass", mass), ("omega", omega), ("hbar", hbar)):
        if not value > 0:
            raise NonPositiveInput(f"{name} must be positive, got {value}")
    return delta_k * math.sqrt(hbar / (2.0 * mass * omega))


def coupling_f(n: int, k: int, eta: float) -> complex:
    """Matrix element f_k(n) of the k-th sideband coupling.

    f_k(n) = exp(-eta^2/2) sum_{l=0}^{n} (i eta)^(2l+k) n! / (l! (l+k)! (n-l)!)
           = exp(-eta^2/2) (i eta)^k n!/(n+k)! L_n^k(eta^2).

    The alternating sum cancels badly for large n, so the generalized
    Laguerre polynomial is evaluated by its three-term recurrence instead.
    """
    if n < 0 or k < 0:
        raise ValueError("n and k must be >= 0")
    prefactor = math.exp(-0.5 * eta * eta) * (1j) ** k
    if eta == 0.0:
        return prefactor if k == 0 else 0j
    log_scale = k * math.log(abs(eta)) + math.lgamma(n + 1) - math.lgamma(n + k + 1)
    return prefactor * math.copysign(1.0, eta) ** k * math.exp(log_scale) * float(
        eval_genlaguerre(n, k, eta * eta))


def _stripped_coupling(n: int, k: int, eta: float) -> complex:
    # f_k(n) with the common exp(-eta^2/2) factor absorbed into Omega
    return coupling_f(n, k, eta) * math.exp(0.5 * eta * eta)


class HamiltonianKind(enum.Enum):
    CARRIER = "carrier"
    RED = "red"
    BLUE = "blue"
    KERR = "kerr"


def _ladder_factor(m: int, k: int) -> float:
    # sqrt((m+k)!/m!)
    return math.exp(0.5 * (math.lgamma(m + k + 1) - math.lgamma(m + 1)))


def build_hamiltonian(
    kind: HamiltonianKind,
    params: LaserParams,
    dim: int,
    k: int = 1,
    detuning: float = 0.0,
) -> np.ndarray:
    """Resonant interaction-picture Hamiltonian as a (2 dim) x (2 dim) matrix.

    ``Omega`` is the carrier Rabi frequency with the Debye-Waller factor
    exp(-eta^2/2) already absorbed, so the carrier expands as
    Omega (1 - eta^2 n + O(eta^4)) sigma_x and KERR is its first-order
    truncation Omega sigma_x - eta^2 Omega n sigma_x.
    """
    if detuning != 0.0:
        raise UnsupportedDetuning("only resonant (zero detuning) drives are modelled")
    if kind in (HamiltonianKind.RED, HamiltonianKind.BLUE) and (k < 1 or dim < k + 1):
        raise ValueError(f"sideband order k={k} needs k >= 1 and dim >= k+1")
    H = np.zeros((2 * dim, 2 * dim), dtype=complex)
    # element <up|H|down> of -Omega (e^{i phi} sigma_+ + h.c.)
    up_down = -params.Omega * np.exp(1j * params.phi)
    eta = params.eta
    if kind is HamiltonianKind.KERR:
        n = np.arange(dim)
        diag = up_down * (1.0 - eta**2 * n)
        H[np.arange(dim), dim + n] = diag
    elif kind is HamiltonianKind.CARRIER:
        for m in range(dim):
            H[m, dim + m] = up_down * _stripped_coupling(m, 0, eta)
    elif kind is HamiltonianKind.RED:
        # |m+k, down> <-> |m, up>
        for m in range(dim - k):
            H[m, dim + m + k] = up_down * _stripped_coupling(m, k, eta) * _ladder_factor(m, k)
    elif kind is HamiltonianKind.BLUE:
        # |m, down> <-> |m+k, up>
        for m in range(dim - k):
            H[m + k, dim + m] = up_down * _stripped_coupling(m, k, eta) * _ladder_factor(m, k)
    else:
        raise ValueError(f"unknown Hamiltonian kind {kind!r}")
    upper = H[:dim, dim:].copy()
    H[dim:, :dim] = upper.conj().T
    return H


def rotation_hamiltonian(Lambda: float, dim: int, sign: int = +1) -> np.ndarray:
    """sign * Lambda * sigma_x acting on the electronic factor only."""
    H = np.zeros((2 * dim, 2 * dim), dtype=complex)
    idx = np.arange(dim)
    H[idx, dim + idx] = sign * Lambda
    H[dim + idx, idx] = sign * Lambda
    return H


# ---------------------------------------------------------------------------
# evolution


def _to_x_basis(state: IonState):
    s = 1.0 / math.sqrt(2.0)
    return s * (state.up.amps + state.down.amps), s * (state.up.amps - state.down.amps)


def _from_x_basis(plus, minus) -> IonState:
    s = 1.0 / math.sqrt(2.0)
    return IonState.from_arrays(s * (plus + minus), s * (plus - minus))


def kerr_evolve(state: IonState, t: float, params: LaserParams,
                rabi_phase: float | None = None) -> IonState:
    """Closed-form U(t) = exp(-i Omega t sigma_x) exp(i Omega_bar t sigma_x n).

    The |up_x> part picks up exp(-i Omega t) exp(+i Omega_bar t n), rotating
    a coherent component alpha -> alpha exp(i Omega_bar t); the |down_x>
    part gets the conjugate phases.  ``rabi_phase`` replaces Omega t when the
    caller knows it exactly (e.g. 0 for a whole number of Rabi periods); the
    rounding in Omega t is otherwise ~1e-14 rad, which matters once the
    post-selected branch is a tiny fraction of the state.
    """
    n = np.arange(state.dim)
    theta = params.Omega_bar * t
    global_phase = params.Omega * t if rabi_phase is None else rabi_phase
    plus, minus = _to_x_basis(state)
    plus = plus * np.exp(-1j * global_phase + 1j * theta * n)
    minus = minus * np.exp(1j * global_phase - 1j * theta * n)
    return _from_x_basis(plus, minus)


def rotate_pulse(state: IonState, t: float, Lambda: float, sign: int = +1) -> IonState:
    """Apply exp(-i sign Lambda t sigma_x) to the electronic factor."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    c = math.cos(Lambda * t)
    s = -1j * sign * math.sin(Lambda * t)
    up, down = state.up.amps, state.down.amps
    return IonState.from_arrays(c * up + s * down, c * down + s * up)


def evolve_dense(state: IonState, H: np.ndarray, t: float) -> IonState:
    """exp(-i H t) |state> through the spectral decomposition of H."""
    H = np.asarray(H)
    defect = np.max(np.abs(H - H.conj().T)) if H.size else 0.0
    if defect > HERMITIAN_TOL:
        raise NotHermitian(f"H - H^dagger has max entry {defect:.3e}")
    if H.shape != (2 * state.dim, 2 * state.dim):
        raise ValueError(f"H has shape {H.shape}, state needs {(2 * state.dim,) * 2}")
    w, V = np.linalg.eigh(0.5 * (H + H.conj().T))
    psi = state.to_vector()
    out = V @ (np.exp(-1j * w * t) * (V.conj().T @ psi))
    return IonState.from_vector(out)


def measure_up(state: IonState) -> tuple[float, IonState]:
    """No-fluorescence outcome: project on |up> and renormalize."""
    prob = state.up.norm_sq / state.norm_sq
    if prob < ZERO_BRANCH_PROB:
        raise ZeroProbabilityBranch(f"no-fluorescence probability {prob:.3e}")
    up = state.up.amps / math.sqrt(state.up.norm_sq)
    return prob, IonState.from_arrays(up, np.zeros(state.dim))


def kerr_validity(v: FockVector, eta: float) -> float:
    """eta^2 (Q + nbar + 1) / 4, the Lamb-Dicke (Kerr) validity measure.

    For the vacuum Q is undefined; the value is taken as eta^2/4.
    """
    mean = number_moment(v, 1)
    if mean <= 0.0:
        return eta**2 / 4.0
    q = (number_variance(v) - mean) / mean
    return eta**2 * (q + mean + 1.0) / 4.0


def carrier_kerr_fidelity(state: IonState, t: float, params: LaserParams) -> float:
    """|<Kerr(t) state | Carrier(t) state>|^2, the cost of the Kerr truncation.

    The comparison is a report, not a guarantee: the error phase on level n
    grows like Omega t eta^4 n(n-1)/4, so long pulses (t ~ 1/(eta^2 Omega))
    can lose fidelity even when ``kerr_validity`` is small.
    """
    exact = evolve_dense(state, build_hamiltonian(HamiltonianKind.CARRIER, params, state.dim), t)
    approx = kerr_evolve(state, t, params)
    return float(abs(np.vdot(approx.to_vector(), exact.to_vector())) ** 2)
