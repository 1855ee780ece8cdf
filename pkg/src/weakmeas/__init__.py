"""Conditioned evolution of a double quantum dot under continuous weak measurement."""

from ._backend import BACKEND
from .bayes import (
    OutcomeDistribution,
    bayes_update,
    condition_on_record,
    outcome_distribution,
    sample_outcome,
)
from .ensemble import (
    EnsembleStats,
    dwell_times,
    fit_decay_rate,
    localization_stats,
    mean_dwell,
    oscillation_spectrum,
    run_ensemble,
)
from .model import (
    DensityMatrix,
    DerivedQuantities,
    DetectorParams,
    SystemParams,
    derived_quantities,
    purity_defect,
    validate_params,
)
from .protocols import (
    RecoveryControls,
    exact_recovery_controls,
    measurement_then_recovery,
    purification_experiment,
    recovery_controls,
    verify_recovery,
)
from .rng import RandomSource
from .trajectory import (
    CurrentSample,
    NoiseSample,
    Scheme,
    TrajectoryRecord,
    cumulative_average,
    euler_langevin_step,
    filter_current,
    hamiltonian_evolve,
    measurement_substep,
    run_trajectory,
    step,
)

__version__ = "0.1.0"
