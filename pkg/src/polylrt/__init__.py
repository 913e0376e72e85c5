"""Broadband subspace projection and likelihood-ratio transient detection."""

from .covariance import (
    BlockToeplitzCov,
    block_toeplitz,
    condition_number,
    estimate_csd,
    projected_csd,
)
from .experiments import (
    ExperimentRecord,
    figure2_config,
    figure3_config,
    power_statistic,
    run_experiment,
    separability,
)
from .lrt import (
    ConditionBounds,
    IllConditionedError,
    LRTDetector,
    TransientFactor,
    build_detector,
    build_detector_woodbury,
    condition_bounds,
    stack_snapshots,
    test_statistic,
    transient_factor,
)
from .pevd import (
    AnalyticEVDResult,
    SubspacePartition,
    diagonalisation_residual,
    partition,
    pevd,
)
from .polymat import (
    LaurentMatrix,
    evaluate_at,
    is_parahermitian,
    is_paraunitary,
    multiply,
    paraconjugate,
    truncate,
)
from .projection import SyndromeStream, project
from .signalgen import (
    ScenarioConfig,
    SourceModel,
    build_mixing_system,
    generate_measurements,
    ground_truth_csd,
    random_paraunitary,
)

__version__ = "0.1.0"
