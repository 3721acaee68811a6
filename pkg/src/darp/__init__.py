"""Distribution-aligning refinement of pseudo-labels.

Refines a matrix of per-sample class probabilities so that its class totals
match a target distribution while staying as close as possible, in
entropy-weighted KL divergence, to the original rows.
"""

__version__ = "0.1.0"

from .errors import (
    DarpError,
    DegenerateColumn,
    DegenerateRow,
    Infeasible,
    InvalidInput,
    InvalidSupport,
    MissingClass,
    NonConvergence,
    SingularConfusion,
)
from .estimator import MarginalEstimate, aggregate_predictions, build_confusion, estimate_marginals
from .harness import (
    SyntheticScenario,
    balanced_accuracy,
    class_counts,
    generate_biased_pseudolabels,
    geometric_mean_score,
    imbalance_ratio,
)
from .refinery import DarpConfig, clip_small_entries, darp, mismatch
from .solver import (
    ProjectionProblem,
    SolveReport,
    alpha_update,
    beta_update,
    dual_objective,
    newton_root,
    primal_objective,
    solve,
)
from .types import (
    ClassMarginals,
    ConfidenceWeights,
    ConfusionMatrix,
    DualState,
    ImbalanceProfile,
    PseudoLabelMatrix,
    entropy_weights,
    validate_row_stochastic,
)

__all__ = [
    "DarpError",
    "DegenerateColumn",
    "DegenerateRow",
    "Infeasible",
    "InvalidInput",
    "InvalidSupport",
    "MissingClass",
    "NonConvergence",
    "SingularConfusion",
    "MarginalEstimate",
    "aggregate_predictions",
    "build_confusion",
    "estimate_marginals",
    "DarpConfig",
    "clip_small_entries",
    "darp",
    "mismatch",
    "SyntheticScenario",
    "balanced_accuracy",
    "class_counts",
    "generate_biased_pseudolabels",
    "geometric_mean_score",
    "imbalance_ratio",
    "ProjectionProblem",
    "SolveReport",
    "alpha_update",
    "beta_update",
    "dual_objective",
    "newton_root",
    "primal_objective",
    "solve",
    "ClassMarginals",
    "ConfidenceWeights",
    "ConfusionMatrix",
    "DualState",
    "ImbalanceProfile",
    "PseudoLabelMatrix",
    "entropy_weights",
    "validate_row_stochastic",
]
