"""Multi-model smart-contract audit harness with ensemble voting and evaluation."""

from .backends import (
    BackendSpec,
    Completion,
    CompletionCache,
    GenerationParams,
    HttpChatBackend,
    MockBackend,
    ReplayBackend,
    build_backends,
    complete,
    fanout,
    prompt_hash,
)
from .corpus import (
    ContractRecord,
    Corpus,
    CorpusSplit,
    GroundTruthLabel,
    export_finetune_set,
    load_corpus,
    load_split,
    save_split,
    split_corpus,
    write_manifest,
)
from .ensemble import (
    METHOD_PERM_OPT,
    METHOD_WEIGHTED,
    SYSTEM_IDS,
    EnsembleConfig,
    PermutationSearchResult,
    RankedPair,
    RankedPrediction,
    VoteMatrix,
    build_vote_matrix,
    learn_weights,
    load_ensemble_config,
    model_hit_rates,
    optimize_permutation,
    perm_opt_vote,
    read_predictions,
    save_ensemble_config,
    single_model_prediction,
    weighted_vote,
    write_predictions,
)
from .errors import (
    AuthError,
    BackendRefusalError,
    BadPermutationError,
    ConfigError,
    ContextOverflowError,
    NetworkError,
    ScauditError,
    TooManyModelsError,
    UnknownVulnerabilityTypeError,
)
from .evaluation import (
    ConfusionMatrix,
    EvalConfig,
    MetricRow,
    ScenarioRecord,
    confusion,
    cosine_hit,
    direct_hit,
    evaluate,
    scenario_analysis,
    scenario_counts,
)
from .parsing import (
    AuditRun,
    Finding,
    NormalizedFinding,
    VulnType,
    build_audit_run,
    canonicalize,
    extract_findings,
    match_vuln_type,
    normalize_function_name,
    read_audit_runs,
    write_audit_runs,
)
from .prompting import render_auditor_prompt, render_finetune_prompt
from .similarity import EmbeddingServiceScorer, TfidfCosineScorer, cosine, tokenize

__version__ = "0.1.0"

__all__ = [
    "AuditRun",
    "AuthError",
    "BackendRefusalError",
    "BackendSpec",
    "BadPermutationError",
    "Completion",
    "CompletionCache",
    "ConfigError",
    "ConfusionMatrix",
    "ContextOverflowError",
    "ContractRecord",
    "Corpus",
    "CorpusSplit",
    "EmbeddingServiceScorer",
    "EnsembleConfig",
    "EvalConfig",
    "Finding",
    "GenerationParams",
    "GroundTruthLabel",
    "HttpChatBackend",
    "METHOD_PERM_OPT",
    "METHOD_WEIGHTED",
    "MetricRow",
    "MockBackend",
    "NetworkError",
    "NormalizedFinding",
    "PermutationSearchResult",
    "RankedPair",
    "RankedPrediction",
    "ReplayBackend",
    "SYSTEM_IDS",
    "ScauditError",
    "ScenarioRecord",
    "TfidfCosineScorer",
    "TooManyModelsError",
    "UnknownVulnerabilityTypeError",
    "VoteMatrix",
    "VulnType",
    "build_audit_run",
    "build_backends",
    "build_vote_matrix",
    "canonicalize",
    "complete",
    "confusion",
    "cosine",
    "cosine_hit",
    "direct_hit",
    "evaluate",
    "export_finetune_set",
    "extract_findings",
    "fanout",
    "learn_weights",
    "load_corpus",
    "load_ensemble_config",
    "load_split",
    "match_vuln_type",
    "model_hit_rates",
    "normalize_function_name",
    "optimize_permutation",
    "perm_opt_vote",
    "prompt_hash",
    "read_audit_runs",
    "read_predictions",
    "render_auditor_prompt",
    "render_finetune_prompt",
    "save_ensemble_config",
    "save_split",
    "scenario_analysis",
    "scenario_counts",
    "single_model_prediction",
    "split_corpus",
    "tokenize",
    "weighted_vote",
    "write_audit_runs",
    "write_manifest",
    "write_predictions",
]
