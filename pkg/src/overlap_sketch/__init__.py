"""Estimate intersection size, containment and Jaccard similarity from samples and MinHash sketches."""
from ._kernels import BACKEND
from .batch import (
    BatchSketchSet,
    batch_containment,
    batch_containment_error,
    batch_similarity,
    build_batch_sketches,
    correct_jaccard,
    correction_ratio,
    jaccard_error_model,
    removal_scores,
    stratified_partition,
)
from .errors import (
    DomainError,
    EmptySketchError,
    EmptySupportError,
    FamilyMismatchError,
    InfeasiblePlanError,
    InvalidPairError,
    MalformedSketchError,
    OverlapSketchError,
    ResourceError,
)
from .estimators import (
    ContainmentEstimate,
    estimate_binomial,
    estimate_union_mle,
    fractional_jaccard_error_bound,
    intersection_from_jaccard,
    jaccard_from_intersection,
)
from .likelihood import (
    OverlapPmf,
    PopulationPair,
    SampleDesign,
    binomial_pmf,
    exact_pmf,
    pmf_moments,
    total_variation,
    union_log_likelihood,
    union_pmf,
)
from .minhash import (
    HashFamily,
    MinHashSketch,
    build_sketch,
    deserialize,
    estimate_sample_jaccard,
    merge_sketches,
    serialize,
)
from .planner import (
    AccuracySpec,
    CostModel,
    plan_containment,
    plan_jaccard,
    posterior_summary,
    runtime_estimate,
    validity_condition,
)
from .simharness import ExperimentConfig, ExperimentReport, run_experiment

__version__ = "0.1.0"
