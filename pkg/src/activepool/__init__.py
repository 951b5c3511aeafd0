"""Pool-based active learning with a combined representativeness and
uncertainty query criterion, an SVM probability backend, and a
benchmark harness exposed through an HTTP service and CLI."""

from .data import (
    Dataset,
    PoolState,
    commit_query,
    init_pool,
    minmax_rescale,
    parse_csv,
    parse_sparse,
    serialize_csv,
    serialize_sparse,
    split_train_test,
)
from .errors import ActivePoolError, DataFormatError, NumericError, UsageError
from .harness import (
    ExperimentConfig,
    RunResult,
    WtlSummary,
    beta_sweep,
    load_dataset,
    paired_t_test,
    run_experiment,
    summarize_wtl,
)
from .optimizer import (
    ProposedQuery,
    QpSolution,
    QueryObjective,
    QueryParams,
    assemble,
    proposed_query,
    round_to_query,
    select_margin,
    select_proposed,
    select_random,
    solve_simplex_qp,
)
from .similarity import (
    ReprTerms,
    SimilarityParams,
    build_repr_terms,
    discrepancy_estimate,
    labeled_redundancy,
    median_bandwidth,
    mutual_similarity,
    pool_coverage,
    prob_similarity,
)
from .svm import (
    KernelParams,
    TrainedModel,
    decision_margin,
    predict,
    predict_proba,
    support_vector_probs,
    train,
)
from .uncertainty import UncertaintyVector, bvsb, combined_uncertainty, position_measure

__version__ = "0.1.0"

__all__ = [
    "ActivePoolError",
    "Dataset",
    "DataFormatError",
    "ExperimentConfig",
    "KernelParams",
    "NumericError",
    "PoolState",
    "ProposedQuery",
    "QpSolution",
    "QueryObjective",
    "QueryParams",
    "ReprTerms",
    "RunResult",
    "SimilarityParams",
    "TrainedModel",
    "UncertaintyVector",
    "UsageError",
    "WtlSummary",
    "assemble",
    "beta_sweep",
    "build_repr_terms",
    "bvsb",
    "combined_uncertainty",
    "commit_query",
    "decision_margin",
    "discrepancy_estimate",
    "init_pool",
    "labeled_redundancy",
    "load_dataset",
    "median_bandwidth",
    "minmax_rescale",
    "mutual_similarity",
    "paired_t_test",
    "parse_csv",
    "parse_sparse",
    "pool_coverage",
    "position_measure",
    "predict",
    "predict_proba",
    "prob_similarity",
    "proposed_query",
    "round_to_query",
    "run_experiment",
    "select_margin",
    "select_proposed",
    "select_random",
    "serialize_csv",
    "serialize_sparse",
    "solve_simplex_qp",
    "split_train_test",
    "summarize_wtl",
    "support_vector_probs",
    "train",
]
