"""Circular states of a trapped-ion motional mode.

Analytic even/odd circular-state formulas and simulation of the three
post-selected pulse schemes that prepare them.
"""

__version__ = "0.1.0"

from .circular import (
    CircularSpec,
    Parity,
    TargetSpec,
    circular_state,
    classify_regime,
    fock_probability,
    lambda_norm,
    moments_from_partition,
    partition,
    target_overlap,
)
from .errors import *  # noqa: F401,F403
from .fock import (
    FockVector,
    TruncationPolicy,
    choose_dim,
    coherent_state,
    inner_product,
    mandel_q,
    number_moment,
)
from .harness import compare_modes, export, reproduce_table1, sweep_radius
from .ion import IonState, LaserParams, kerr_evolve, measure_up, rotate_pulse
from .schemes import (
    Mode,
    Scheme,
    run_sequence,
    scheme1_plan,
    scheme2_plan,
    scheme2_roots,
    scheme3_plan,
    success_probability,
    total_time,
)
