"""Sequential experiment design with a Bayesian logistic belief and the
knowledge-gradient policy: belief updates, selection policies, a shared-label
benchmark simulator, CSV data handling, and a live advisor service."""

from .belief import (
    Alternative,
    BeliefState,
    ConvergenceError,
    Observation,
    PriorConfig,
    batch_map_fit,
    kappa,
    map_update_single,
    predictive_prob,
    predictive_prob_pool,
    psi,
    sigmoid,
)
from .policies import (
    KgScoreReport,
    PolicyKind,
    implementation_decision,
    kg_score_one,
    kg_select,
    most_uncertain_select,
    random_select,
)
from .simulate import (
    ExperimentConfig,
    ExperimentResult,
    GroundTruth,
    LabelTable,
    PolicyTrace,
    gen_synthetic_pool,
    init_examples,
    opportunity_cost,
    pregenerate_labels,
    run_experiment,
    run_replication,
    sample_truth,
    substream,
)

__version__ = "0.1.0"

__all__ = [
    "Alternative",
    "BeliefState",
    "ConvergenceError",
    "Observation",
    "PriorConfig",
    "batch_map_fit",
    "kappa",
    "map_update_single",
    "predictive_prob",
    "predictive_prob_pool",
    "psi",
    "sigmoid",
    "KgScoreReport",
    "PolicyKind",
    "implementation_decision",
    "kg_score_one",
    "kg_select",
    "most_uncertain_select",
    "random_select",
    "ExperimentConfig",
    "ExperimentResult",
    "GroundTruth",
    "LabelTable",
    "PolicyTrace",
    "gen_synthetic_pool",
    "init_examples",
    "opportunity_cost",
    "pregenerate_labels",
    "run_experiment",
    "run_replication",
    "sample_truth",
    "substream",
    "__version__",
]
