"""Greedy window-based noise variance estimation for sparse regression."""

from .errors import (
    ConvergenceError,
    DataFormatError,
    DegenerateBlockError,
    InvalidInputError,
    NumericalError,
)
from .estimators import (
    VarianceEstimate,
    WindowPlan,
    bias_correct,
    default_window_candidates,
    gve_orthonormal,
    gve_rip,
    gve_tv,
    lambda_from_sigma,
    oracle_sigma,
    select_window_inflection,
    select_window_oracle,
    trimmed_window_average,
    window_stats,
)
from .lasso import (
    CvResult,
    LassoSolution,
    cv_lasso_variance,
    lasso_coordinate_descent,
    soft_threshold,
)
from .linalg import (
    BlockOrthogonalizer,
    RipProbeResult,
    block_orthonormal_factor,
    build_regularized_design,
    estimate_rip_delta,
    matvec,
    symmetric_eigendecomposition,
    transpose_matvec,
)
from .simulate import (
    InstanceConfig,
    RegressionInstance,
    ReportRow,
    SummaryRow,
    generate_design,
    generate_instance,
    generate_signal,
    run_grid,
    summarize,
)

__version__ = "0.1.0"

__all__ = [
    "BlockOrthogonalizer",
    "ConvergenceError",
    "CvResult",
    "DataFormatError",
    "DegenerateBlockError",
    "InstanceConfig",
    "InvalidInputError",
    "LassoSolution",
    "NumericalError",
    "RegressionInstance",
    "ReportRow",
    "RipProbeResult",
    "SummaryRow",
    "VarianceEstimate",
    "WindowPlan",
    "bias_correct",
    "block_orthonormal_factor",
    "build_regularized_design",
    "cv_lasso_variance",
    "default_window_candidates",
    "estimate_rip_delta",
    "generate_design",
    "generate_instance",
    "generate_signal",
    "gve_orthonormal",
    "gve_rip",
    "gve_tv",
    "lambda_from_sigma",
    "lasso_coordinate_descent",
    "matvec",
    "oracle_sigma",
    "run_grid",
    "select_window_inflection",
    "select_window_oracle",
    "soft_threshold",
    "summarize",
    "symmetric_eigendecomposition",
    "transpose_matvec",
    "trimmed_window_average",
    "window_stats",
    "__version__",
]
