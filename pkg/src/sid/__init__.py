"""Nonparametric independence tests for right-censored survival data.

The survival independence divergence (SID) measures dependence between an
event time subject to right censoring and a covariate vector through a
kernel (or semimetric) on the covariate space. This package provides the
closed-form V- and U-statistic estimators, a multiplier wild bootstrap for
calibration, scenario generators with censoring-rate calibration, a Monte
Carlo harness, and a CLI.
"""

from .bootstrap import (
    BetaSid,
    BootstrapMatrix,
    KernelSid,
    MultiplierStream,
    NullDiagnostics,
    bootstrap_null_diagnostics,
    build_bootstrap_matrix,
    critical_value_from_draws,
    p_value_from_draws,
    run_test,
    wild_draws,
    wild_statistic,
)
from .data import (
    CensoredDataset,
    CensoredObservation,
    TestConfig,
    TestResult,
    flip_censoring,
    ingest_csv,
    validate_dataset,
)
from .errors import (
    BadMultiplier,
    BracketFailure,
    CalibrationNotApplicable,
    DataError,
    DegenerateCovariates,
    DegenerateTimes,
    DimensionMismatch,
    InconsistentDimension,
    InstanceTooLarge,
    MissingColumn,
    NoEvents,
    NonBinaryStatus,
    NonPositiveTime,
    ParseError,
    SidError,
    TooFewObservations,
    UncalibratedCensoring,
    UnknownScenario,
)
from .estimators import (
    SidEstimate,
    SmoothedProcesses,
    build_smoothed_processes,
    sid_beta_u,
    sid_beta_v,
    sid_u_bruteforce,
    sid_u_statistic,
    sid_v_event_sum,
    sid_v_quintuple,
)
from .kernels import (
    DistanceInducedKernel,
    GaussianKernel,
    LaplacianKernel,
    NormPowerSemimetric,
    SmoothingSpec,
    gram_matrix,
    kernel_semimetric_consistency,
    median_heuristic,
    semimetric_matrix,
    silverman_bandwidth,
)
from .simulation import (
    SCENARIOS,
    MonteCarloReport,
    Scenario,
    ScenarioSpec,
    SweepResult,
    calibrate_censoring,
    generate,
    monte_carlo,
    parse_method,
    power_sweep,
)

__version__ = "0.1.0"

__all__ = [
    "BadMultiplier",
    "BetaSid",
    "BootstrapMatrix",
    "BracketFailure",
    "CalibrationNotApplicable",
    "CensoredDataset",
    "CensoredObservation",
    "DataError",
    "DegenerateCovariates",
    "DegenerateTimes",
    "DimensionMismatch",
    "DistanceInducedKernel",
    "GaussianKernel",
    "InconsistentDimension",
    "InstanceTooLarge",
    "KernelSid",
    "LaplacianKernel",
    "MissingColumn",
    "MonteCarloReport",
    "MultiplierStream",
    "NoEvents",
    "NonBinaryStatus",
    "NonPositiveTime",
    "NormPowerSemimetric",
    "NullDiagnostics",
    "ParseError",
    "SCENARIOS",
    "Scenario",
    "ScenarioSpec",
    "SidError",
    "SidEstimate",
    "SmoothedProcesses",
    "SmoothingSpec",
    "SweepResult",
    "TestConfig",
    "TestResult",
    "TooFewObservations",
    "UncalibratedCensoring",
    "UnknownScenario",
    "bootstrap_null_diagnostics",
    "build_bootstrap_matrix",
    "build_smoothed_processes",
    "calibrate_censoring",
    "critical_value_from_draws",
    "flip_censoring",
    "generate",
    "gram_matrix",
    "ingest_csv",
    "kernel_semimetric_consistency",
    "median_heuristic",
    "monte_carlo",
    "p_value_from_draws",
    "parse_method",
    "power_sweep",
    "run_test",
    "semimetric_matrix",
    "sid_beta_u",
    "sid_beta_v",
    "sid_u_bruteforce",
    "sid_u_statistic",
    "sid_v_event_sum",
    "sid_v_quintuple",
    "silverman_bandwidth",
    "validate_dataset",
    "wild_draws",
    "wild_statistic",
]
