"""Gibbs random permutations of [-n, n] with banded displacements.

Exact enumeration oracles, a seeded Metropolis sampler, the executable
uncrossing map with exhaustive verification, and the analysis layer for
cycle-diameter localization.
"""

from .core import (
    INFINITY,
    CycleStats,
    DegenerateSwapError,
    DomainError,
    ModelParams,
    Permutation,
    UnsupportedExponentError,
    cycle_of,
    energy,
    in_support,
    max_displacement,
    reflect,
    swap_images,
)
from .exact import (
    BAND_ENUMERATION_CAP,
    FULL_ENUMERATION_CAP,
    CapacityError,
    ExactDistribution,
    count_band_permutations,
    enumerate_permutations,
    exact_distribution,
    exact_expectation,
    exact_tail,
    exact_tail_curve,
)
from .sampler import (
    ChainSummary,
    CycleObservation,
    InitialState,
    SamplerConfig,
    metropolis_acceptance,
    run_chain,
    sample_cycle_observables,
    spawn_chain_seed,
)
from .uncross import (
    CrossingConditionError,
    CrossingRecord,
    NoCrossingError,
    RatioCheck,
    VerificationCertificate,
    crossing_ratio_check,
    crossing_record,
    first_upcrossing,
    last_downcrossing,
    run_verification,
    uncross,
    uncross_min,
    uncross_preimage,
)
from .analysis import (
    FitResult,
    NoDataError,
    PreimageSizeStats,
    RecurrenceResult,
    TailCurve,
    TailPoint,
    UnfittableError,
    band_structure_stat,
    estimate_tail_curve,
    fit_decay_and_exponent,
    fit_exponential_decay,
    largest_propagating_c0,
    preimage_size_stats,
    recurrence_check,
)

__version__ = "0.1.0"

__all__ = [
    "INFINITY",
    "BAND_ENUMERATION_CAP",
    "FULL_ENUMERATION_CAP",
    "CapacityError",
    "ChainSummary",
    "CrossingConditionError",
    "CrossingRecord",
    "CycleObservation",
    "CycleStats",
    "DegenerateSwapError",
    "DomainError",
    "ExactDistribution",
    "FitResult",
    "InitialState",
    "ModelParams",
    "NoCrossingError",
    "NoDataError",
    "Permutation",
    "PreimageSizeStats",
    "RatioCheck",
    "RecurrenceResult",
    "SamplerConfig",
    "TailCurve",
    "TailPoint",
    "UnfittableError",
    "UnsupportedExponentError",
    "VerificationCertificate",
    "band_structure_stat",
    "count_band_permutations",
    "crossing_ratio_check",
    "crossing_record",
    "cycle_of",
    "energy",
    "enumerate_permutations",
    "estimate_tail_curve",
    "exact_distribution",
    "exact_expectation",
    "exact_tail",
    "exact_tail_curve",
    "first_upcrossing",
    "fit_decay_and_exponent",
    "fit_exponential_decay",
    "in_support",
    "largest_propagating_c0",
    "last_downcrossing",
    "max_displacement",
    "metropolis_acceptance",
    "preimage_size_stats",
    "recurrence_check",
    "reflect",
    "run_chain",
    "run_verification",
    "sample_cycle_observables",
    "spawn_chain_seed",
    "swap_images",
    "uncross",
    "uncross_min",
    "uncross_preimage",
]
