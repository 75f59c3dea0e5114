"""Exception types raised across the package."""


class CircularIonError(Exception):
    """Base class for all package errors."""


class TruncationTooSmall(CircularIonError):
    """The truncated Fock space drops too much probability mass."""

    def __init__(self, tail_mass, dim):
        self.tail_mass = tail_mass
        self.dim = dim
        super().__init__(f"tail mass {tail_mass:.3e} beyond dim={dim} is too large")


class DimensionMismatch(CircularIonError, ValueError):
    pass


class NotNormalized(CircularIonError, ValueError):
    pass


class ZeroMeanOccupation(CircularIonError, ValueError):
    pass


class NonPositiveInput(CircularIonError, ValueError):
    pass


class UnsupportedDetuning(CircularIonError, ValueError):
    pass


class NotHermitian(CircularIonError, ValueError):
    pass


class ZeroProbabilityBranch(CircularIonError):
    """The post-selected (no-fluorescence) branch has vanishing probability."""


class DegenerateState(CircularIonError, ValueError):
    """The requested superposition has zero norm (e.g. the odd family at a=0)."""


class ExportError(CircularIonError, OSError):
    pass
