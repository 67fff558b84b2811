"""Quantile universal threshold selection for sparsity-inducing estimators.

The package provides the zero-threshold catalogue, the solvers whose
zero-sets it characterizes, Monte Carlo null-quantile computation with
closed-form instances, high-dimensional noise-variance estimation, and the
simulation campaigns built on top of them.
"""

from .families import (
    BERNOULLI,
    GAUSSIAN,
    POISSON,
    ConvergenceError,
    DomainError,
    GlmFamily,
    IncompatiblePenaltyError,
    MleNonExistentError,
    ProblemInstance,
    QutError,
    SaturatedModelError,
    SparseFit,
    SupportMetrics,
    ThresholdResult,
    binomial_scaled,
    family_from_name,
    family_mean,
    support_of,
)
from .paths import cv_select_lambda, lambda_grid, support_path
from .qut import (
    ClosedFormThreshold,
    NullSampler,
    PipelineResult,
    closed_form_qut,
    compute_qut,
    fit_at_threshold,
    implied_level_best_subset,
    qut_pipeline_glm,
    sample_null_stat,
    upper_quantile,
)
from .solvers import (
    InterpolationError,
    SolverConfig,
    gaussian_kkt_residual,
    glm_kkt_residual,
    glm_lasso_fit,
    lasso_fit,
    mle_refit,
    null_mle,
    sqrt_lasso_fit,
    svd_soft_threshold,
    tv1d_fit,
)
from .simlab import (
    PhaseGridSpec,
    ScenarioSpec,
    SimReport,
    apply_method,
    generate_scenario,
    oir_metric,
    rmse_metric,
    run_holdout,
    run_phase_campaign,
    run_sensitivity_study,
    run_table2_campaign,
    support_metrics,
)
from .variance import (
    VarianceEstimate,
    estimate_sigma2,
    qut_lambda_scale,
    sigma2_rcv,
    sigma2_refitted_qut,
    sigma2_residual_cv,
)
from .zerothresh import (
    PenaltySpec,
    matrix_zero_threshold,
    mle_domain_contains,
    zero_threshold,
    zero_threshold_glm,
)

__version__ = "0.1.0"
