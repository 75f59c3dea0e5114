"""Truncated Fock-space vectors for a single bosonic mode.

States are stored as dense complex amplitude arrays indexed by the number
of quanta n = 0 .. dim-1.  Factorials enter only through ``lgamma`` so
that amplitudes stay finite far beyond n = 170.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from .errors import (
    DimensionMismatch,
    NotNormalized,
    TruncationTooSmall,
    ZeroMeanOccupation,
)

NORM_TOL = 1e-10
OVERLAP_TOL = 1e-8
# coherent_state refuses to return a vector that misses more mass than this
HARD_TAIL_LIMIT = 1e-6


@dataclass(frozen=True)
class TruncationPolicy:
    tail_tol: float = 1e-12
    min_dim: int = 16

    def __post_init__(self):
        if not 0.0 < self.tail_tol < 1.0:
            raise ValueError(f"tail_tol must lie in (0, 1), got {self.tail_tol}")
        if self.min_dim < 1:
            raise ValueError("min_dim must be positive")


DEFAULT_POLICY = TruncationPolicy()


@dataclass(frozen=True, eq=False)
class FockVector:
    """Amplitudes of a motional state in the number basis.

    ``tail_mass`` is the probability the untruncated state would put at
    n >= dim; it is zero for vectors that are exact in the truncated space.
    """

    amps: np.ndarray
    tail_mass: float = field(default=0.0)

    def __post_init__(self):
        amps = np.array(self.amps, dtype=complex).reshape(-1)
        if amps.size < 1:
            raise ValueError("a FockVector needs at least one amplitude")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @property
    def dim(self) -> int:
        return self.amps.size

    @property
    def norm_sq(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm_sq - 1.0) <= tol

    def normalized(self) -> "FockVector":
        n2 = self.norm_sq
        if n2 <= 0.0:
            raise ZeroDivisionError("cannot normalize the zero vector")
        return FockVector(self.amps / math.sqrt(n2))

    @classmethod
    def basis(cls, n: int, dim: int) -> "FockVector":
        if not 0 <= n < dim:
            raise ValueError(f"Fock index {n} outside 0..{dim - 1}")
        amps = np.zeros(dim, dtype=complex)
        amps[n] = 1.0
        return cls(amps)

    def __repr__(self):
        return f"FockVector(dim={self.dim}, norm_sq={self.norm_sq:.12g})"


def poisson_tail(mean: float, dim: int) -> float:
    """Probability that a Poisson(mean) variable is >= dim."""
    if mean == 0.0:
        return 0.0
    return float(poisson.sf(dim - 1, mean))


def choose_dim(r: float, policy: TruncationPolicy = DEFAULT_POLICY) -> int:
    """Smallest truncation (at least ``policy.min_dim``) whose Poisson tail
    for a coherent state of radius ``r`` is below ``policy.tail_tol``."""
    if r < 0:
        raise ValueError("radius must be non-negative")
    mean = float(r) ** 2
    if mean == 0.0:
        return policy.min_dim
    # isf gives an estimate; walk to the exact boundary from there
    guess = poisson.isf(policy.tail_tol, mean)
    if not math.isfinite(guess):  # isf gives up for very small tolerances
        guess = mean
    dim = max(policy.min_dim, int(guess) + 1)
    while dim > policy.min_dim and poisson_tail(mean, dim - 1) < policy.tail_tol:
        dim -= 1
    while poisson_tail(mean, dim) >= policy.tail_tol:
        dim += 1
    return dim


def coherent_amplitudes(alpha: complex, dim: int) -> np.ndarray:
    """Raw truncated amplitudes exp(-|a|^2/2) a^n / sqrt(n!), n < dim."""
    alpha = complex(alpha)
    n = np.arange(dim)
    out = np.zeros(dim, dtype=complex)
    r = abs(alpha)
    if r == 0.0:
        out[0] = 1.0
        return out
    log_mag = -0.5 * r * r + n * math.log(r) - 0.5 * gammaln(n + 1)
    out[:] = np.exp(log_mag + 1j * n * np.angle(alpha))
    return out


def coherent_state(
    alpha: complex, dim: int, policy: TruncationPolicy = DEFAULT_POLICY
) -> FockVector:
    """Coherent state |alpha> truncated to ``dim`` levels.

    The vector is renormalized when the discarded tail is below
    ``policy.tail_tol``; otherwise it is returned raw with ``tail_mass``
    set and a warning.  A tail of 1e-6 or more raises TruncationTooSmall.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    tail = poisson_tail(abs(complex(alpha)) ** 2, dim)
    if tail >= HARD_TAIL_LIMIT:
        raise TruncationTooSmall(tail, dim)
    amps = coherent_amplitudes(alpha, dim)
    if tail < policy.tail_tol:
        return FockVector(amps / np.linalg.norm(amps))
    warnings.warn(
        f"coherent state |{alpha}> truncated at dim={dim} drops {tail:.2e} of its mass",
        RuntimeWarning,
        stacklevel=2,
    )
    return FockVector(amps, tail_mass=tail)


def inner_product(u: FockVector, v: FockVector) -> complex:
    """<u|v>, antilinear in the first argument."""
    if u.dim != v.dim:
        raise DimensionMismatch(f"dims differ: {u.dim} vs {v.dim}")
    return complex(np.vdot(u.amps, v.amps))


def _require_normalized(v: FockVector):
    if not v.is_normalized():
        raise NotNormalized(f"vector has norm^2 = {v.norm_sq!r}")


def number_moment(v: FockVector, k: int) -> float:
    """<n^k> for a normalized state."""
    if k < 0:
        raise ValueError("moment order must be >= 0")
    _require_normalized(v)
    if k == 0:
        return 1.0
    n = np.arange(v.dim, dtype=float)
    return float(np.sum(n**k * v.probabilities()))


def number_variance(v: FockVector) -> float:
    _require_normalized(v)
    p = v.probabilities()
    n = np.arange(v.dim, dtype=float)
    mean = np.sum(n * p)
    return float(np.sum((n - mean) ** 2 * p))


def mandel_q(v: FockVector) -> float:
    mean = number_moment(v, 1)
    if mean <= 0.0:
        raise ZeroMeanOccupation("Mandel Q is undefined for <n> = 0")
    return (number_variance(v) - mean) / mean


def apply_annihilation_power(v: FockVector, N: int) -> FockVector:
    """a^N |v>, unnormalized; the top N slots of the result are zero."""
    if N < 0:
        raise ValueError("power must be >= 0")
    if N == 0:
        return v
    dim = v.dim
    out = np.zeros(dim, dtype=complex)
    if N < dim:
        n = np.arange(dim - N)
        # sqrt((n+N)!/n!)
        scale = np.exp(0.5 * (gammaln(n + N + 1) - gammaln(n + 1)))
        out[: dim - N] = scale * v.amps[N:]
    return FockVector(out)
