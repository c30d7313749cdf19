"""Block-sparse dictionary analysis, recovery, and regression toolkit."""

__version__ = "0.1.0"

from .certificates import (
    CertificateReport,
    complementary_size_condition,
    exact_recovery_certificate,
    group_lasso_optimality_check,
    invertibility_condition,
    orthogonality_condition,
    regression_bundle,
)
from .conditioning import (
    ConditioningReport,
    extract_block_subdictionary,
    hollow_gram,
    masked_gram_norm_estimate,
    monte_carlo_conditioning,
    singular_extrema,
)
from .dictgen import (
    DictGenSpec,
    apply_spectral_multiplier,
    kronecker_dictionary,
    mix64,
    random_unit_norm,
    stream,
)
from .errors import ConvergenceFailure, InfeasibleProblemError, InputError
from .experiments import (
    ExperimentConfig,
    ExperimentSummary,
    NoiseConfig,
    Selection,
    SummaryRow,
    TrialRecord,
    desk_scale_config,
    emit_summary,
    parse_summary,
    full_scale_config,
    recovery_success,
    regression_error_bound,
    run_recovery_experiment,
    run_regression_experiment,
    select_dictionary,
)
from .metrics import (
    BicVerdict,
    Dictionary,
    DictionaryMetrics,
    block_norm_b1,
    block_norm_b2,
    check_bic,
    coherence,
    dictionary_metrics,
    inter_block_coherence,
    intra_block_coherence,
    masked_gram_norm_bound,
    metrics_report,
    spectral_norm,
)
from .signals import (
    BlockSparseSignal,
    Observation,
    calibrate_noise,
    normalized,
    observe,
    sample_block_support,
    sample_signal,
)
from .solvers import (
    EqualityProjector,
    SolverConfig,
    SolverResult,
    block_soft_threshold,
    debias,
    detect_block_support,
    group_lasso,
    l1_basis_pursuit,
    l21_basis_pursuit,
    lasso,
    soft_threshold,
)
