"""Scoring harness for feature-attribution explanations.

Computes three complementary quality terms for a method's explanations,
plausibility (overlap with human-edited feature sets), simplicity (a chunk
count penalty), and reproducibility (how well humans recover the model's
prediction), and combines them into one weighted composite score.
"""

from .bundle import (
    CoverageReport,
    EvaluationBundle,
    TaskConfig,
    generate_synthetic_bundle,
    load_bundle,
    load_task_config,
    save_bundle,
    tokens_checksum,
    validate_bundle,
)
from .errors import (
    AnnotationConflictError,
    ConfigError,
    ConsistencyError,
    CoverageError,
    DataError,
    HarnessError,
    LeaseConflictError,
    ParseError,
    ReferentialError,
    RegistrationError,
    StructuralError,
    UsageError,
)
from .extraction import (
    DEFAULT_POLICY,
    ExtractionPolicy,
    PolicyMode,
    count_chunks,
    extract_feature_sets,
)
from .metrics import (
    AggregationMode,
    compose_iqs,
    derive_human_sets,
    jaccard,
    log_loss,
    plausibility,
    reproducibility,
    score_method,
    simplicity,
)
from .report import (
    AgreementReport,
    CriterionAverages,
    RankingTable,
    SweepTable,
    agreement_rate,
    per_criterion_averages,
    rank_methods,
    render,
)
from .sweep import SweepStats, generate_weight_grid, sweep
from .types import (
    EQUAL_WEIGHTS,
    AnnotationRecord,
    AttributionExplanation,
    AttributionSign,
    IQSWeights,
    LossKind,
    MethodScorecard,
    Sample,
    SignedFeatureSets,
    SimplicityConfig,
    TaskKind,
    TaskSpec,
    TermTriple,
)

__version__ = "0.1.0"

__all__ = [
    "AggregationMode",
    "AgreementReport",
    "AnnotationConflictError",
    "AnnotationRecord",
    "AttributionExplanation",
    "AttributionSign",
    "ConfigError",
    "ConsistencyError",
    "CoverageError",
    "CoverageReport",
    "CriterionAverages",
    "DEFAULT_POLICY",
    "DataError",
    "EQUAL_WEIGHTS",
    "EvaluationBundle",
    "ExtractionPolicy",
    "HarnessError",
    "IQSWeights",
    "LeaseConflictError",
    "LossKind",
    "MethodScorecard",
    "ParseError",
    "PolicyMode",
    "RankingTable",
    "ReferentialError",
    "RegistrationError",
    "Sample",
    "SignedFeatureSets",
    "SimplicityConfig",
    "StructuralError",
    "SweepStats",
    "SweepTable",
    "TaskConfig",
    "TaskKind",
    "TaskSpec",
    "TermTriple",
    "UsageError",
    "agreement_rate",
    "compose_iqs",
    "count_chunks",
    "derive_human_sets",
    "extract_feature_sets",
    "generate_synthetic_bundle",
    "generate_weight_grid",
    "jaccard",
    "load_bundle",
    "load_task_config",
    "log_loss",
    "per_criterion_averages",
    "plausibility",
    "rank_methods",
    "render",
    "reproducibility",
    "save_bundle",
    "score_method",
    "simplicity",
    "sweep",
    "tokens_checksum",
    "validate_bundle",
]
