"""Quantized momentum-transfer scattering: discrete angles, particle
ensembles, and a far-field wave-optics cross-check."""

from .ensemble import (
    ConfigError,
    DegenerateWeightsError,
    EmptyBranchesError,
    PatternHistogram,
    SimConfig,
    SimResult,
    WeightMode,
    branch_weights,
    histogram_cdf_distance,
    run,
    sample_event,
)
from .kinematics import (
    H_NATURAL,
    H_SI,
    Aperture,
    Beam,
    Branch,
    DoubleSlit,
    Interaction,
    Laue,
    Rule,
    ScatteringBranch,
    SymmetryInterval,
    characteristic_length,
    momentum_transfer,
    order_range,
    quantized_angles,
    symmetry_intervals,
    verify_branch,
    verify_quantum,
)
from .oracle import (
    ComparisonReport,
    Extremum,
    ExtremumKind,
    IntensityProfile,
    compare_extrema,
    compare_scenario,
    find_extrema,
    intensity,
)

__version__ = "0.1.0"
