"""Monte Carlo simulation and analysis of two-sided detection experiments.

The package simulates EPRB-style trials (two stations, two analyzer
settings each, detect/no-detect outcomes) from quantum or local
hidden-variable sources, pushes them through a configurable detection
channel, and evaluates the Clauser-Horne inequality family together
with the partition violation-fraction statistic, parameter-independence
and outcome-independence residuals, and a fair-sampling correlator
contrast.
"""

from .analysis import (
    CountsTable,
    PartitionReport,
    ScanCell,
    ScanReport,
    TrialBatch,
    accumulate_counts,
    drop_empty_windows,
    estimate_probabilities,
    oi_residual_from_counts,
    outcome_conditional_marginals,
    partition_and_score,
    pi_residual_from_counts,
    settings_conditional_marginals,
)
from .channel import (
    DetectorConfig,
    ForgingStrategy,
    LeakageChannel,
    LeakageMode,
    LeakedSignal,
    OutcomeMimicStrategy,
    SettingBiasStrategy,
    SignalingDemo,
    TargetCorrelationStrategy,
    apply_detection,
    bit_flip_noise,
    leak_and_forge,
    schedule_settings,
    signaling_pattern_demo,
)
from .errors import (
    ChsimError,
    ContractViolationError,
    DomainError,
    InsufficientDataError,
    TrialFormatError,
    UndefinedConditionalError,
    UndefinedCorrelatorError,
    UnknownKeyError,
    UnknownModelError,
    UsageError,
    ValidationError,
)
from .experiment import (
    ExperimentResult,
    analytic_probability_table,
    analyze_batch,
    efficiency_scan,
    generate_trials,
    optimal_ch_angles,
    run_experiment,
    scan_from_settings,
    temporal_mixture_test,
)
from .inequality import (
    CHReport,
    MINUS_POSITIONS,
    ProbabilityTable,
    VARIANT_LABELS,
    ch_tautology_lhs,
    ch_values,
    chsh_value,
    factorizability_residual,
    oi_residual,
    pi_residual,
)
from .io import (
    ExperimentConfig,
    ScanSettings,
    config_from_dict,
    export_report,
    load_config,
    read_trials,
    write_trials,
)
from .rng import BLOCK_SIZE, FIELDS, FieldStreams
from .sources import (
    CH_OPTIMAL_ANGLES,
    DETECTION_BIAS_ANGLES,
    MAXIMAL_R,
    EntangledPairSource,
    LocalHiddenVariableModel,
    ModelInfo,
    SourceModel,
    TemporalMixtureModel,
    builtin_models,
    default_angles,
    flash_response,
    make_biased_response,
    make_coin_hidden,
    make_constant_response,
    make_model,
    quantum_joint_probs,
    sample_responses,
    sample_trial,
    sign_response,
    uniform_polarization,
)

__version__ = "0.1.0"
