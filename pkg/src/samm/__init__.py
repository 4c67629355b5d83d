"""Structural adaptation via maximum minimization.

Estimation of the effective dimension-reduction subspace in multi-index
regression: anisotropic local-linear gradient estimation, gradient
functionals against a bounded rank-Fourier family, and convex max-min
extraction over the relaxed projector set, iterated under a geometric
bandwidth/penalty schedule.
"""

__version__ = "0.1.0"

from .basis import BasisColumn, BasisMatrix, build_basis, rank_permutations
from .estimator import (
    EstimateResult,
    IterationRecord,
    LossReport,
    Schedule,
    SolverOptions,
    default_schedule,
    loss_metrics,
    run_samm,
    standardize,
    theoretical_h1,
)
from .kernels import LINEAR_DECAY, QUARTIC, KernelSpec, MetricShape, kernel_eval, weight_matrix, weights
from .locallinear import (
    BetaMatrix,
    Dataset,
    GradientField,
    SingularGramError,
    compute_betas,
    data_driven_h1,
    local_linear_fit,
)
from .pimax import (
    CappedSpectral,
    ProjectorEstimate,
    SolverReport,
    deterministic_eigh,
    dimension_scan,
    dual_bound,
    project_capped_simplex,
    project_to_Am,
    solve_maxmin,
    solve_pca,
    truncate_to_projector,
)
from .simgen import SimSpec, SimSummary, example_m_star, generate, run_campaign

__all__ = [
    "__version__",
    "BasisColumn",
    "BasisMatrix",
    "BetaMatrix",
    "CappedSpectral",
    "Dataset",
    "EstimateResult",
    "GradientField",
    "IterationRecord",
    "KernelSpec",
    "LINEAR_DECAY",
    "LossReport",
    "MetricShape",
    "ProjectorEstimate",
    "QUARTIC",
    "Schedule",
    "SimSpec",
    "SimSummary",
    "SingularGramError",
    "SolverOptions",
    "SolverReport",
    "build_basis",
    "compute_betas",
    "data_driven_h1",
    "default_schedule",
    "deterministic_eigh",
    "dimension_scan",
    "dual_bound",
    "example_m_star",
    "generate",
    "kernel_eval",
    "local_linear_fit",
    "loss_metrics",
    "project_capped_simplex",
    "project_to_Am",
    "rank_permutations",
    "run_campaign",
    "run_samm",
    "solve_maxmin",
    "solve_pca",
    "standardize",
    "theoretical_h1",
    "truncate_to_projector",
    "weight_matrix",
    "weights",
]
