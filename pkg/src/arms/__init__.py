"""Actor security-reputation scoring for open-source ecosystems.

The engine turns an actor's forge interaction history into seven security
signals and three weightage signals, composes them into a final reputation,
positions it against an ecosystem benchmark, and emits an advisory with
spoof-pattern flags. A synthetic evaluation harness measures how well the
signals rank incident-prone actors.
"""

from .domain import (
    ActorProfile,
    ActorSnapshot,
    AdvisoryThresholds,
    BranchRecord,
    ContributionEvent,
    DependencyRecord,
    EngineConfig,
    EventKind,
    ExternalProjectRef,
    ProjectRecord,
    Purpose,
    SCHEMA_VERSION,
    SIGNAL_IDS,
    SecurityFeatureState,
    Severity,
    Violation,
    Visibility,
    VulnSource,
    VulnerabilityRecord,
    config_fingerprint,
    config_from_dict,
    config_to_dict,
    default_config,
    validate_snapshot,
)
from .errors import (
    ActorNotFound,
    ArmsError,
    AuthRequired,
    ConfigError,
    ConfigMismatch,
    DegenerateLabels,
    DimensionMismatch,
    DomainError,
    EmptyCell,
    EmptyPopulation,
    ExistsWithoutForce,
    InconsistentPopulation,
    IoError,
    NotFound,
    ParseError,
    RateLimited,
    SchemaDrift,
    UnknownActor,
    UnsupportedSchemaVersion,
    ValidationFailed,
)
from .ingestion import (
    FetchReport,
    ForgeSource,
    fetch_actor_snapshot,
    load_snapshot,
    write_snapshot,
)
from .reputation import (
    Advisory,
    EcosystemBenchmark,
    Flag,
    ReputationReport,
    benchmark_from_dict,
    benchmark_to_dict,
    build_benchmark,
    composite_score,
    extend_graph_for_actor,
    final_reputation,
    percentile,
    report_to_dict,
    score_actor,
    score_population,
    zscore,
)
from .signals import (
    SignalScore,
    decay_score,
    score_all_signals,
    severity_adherence,
    usage_weight,
)
from .store import Store
from .weighting import (
    ContributionGraph,
    GraphEdge,
    WeightageScore,
    build_graph,
    export_edge_list,
    score_weightage,
)

__version__ = "0.1.0"

__all__ = [
    "ActorNotFound",
    "ActorProfile",
    "ActorSnapshot",
    "Advisory",
    "AdvisoryThresholds",
    "ArmsError",
    "AuthRequired",
    "BranchRecord",
    "ConfigError",
    "ConfigMismatch",
    "ContributionEvent",
    "ContributionGraph",
    "DegenerateLabels",
    "DependencyRecord",
    "DimensionMismatch",
    "DomainError",
    "EcosystemBenchmark",
    "EmptyCell",
    "EmptyPopulation",
    "EngineConfig",
    "EventKind",
    "ExistsWithoutForce",
    "ExternalProjectRef",
    "FetchReport",
    "Flag",
    "ForgeSource",
    "GraphEdge",
    "InconsistentPopulation",
    "IoError",
    "NotFound",
    "ParseError",
    "ProjectRecord",
    "Purpose",
    "RateLimited",
    "ReputationReport",
    "SCHEMA_VERSION",
    "SIGNAL_IDS",
    "SchemaDrift",
    "SecurityFeatureState",
    "Severity",
    "SignalScore",
    "Store",
    "UnknownActor",
    "UnsupportedSchemaVersion",
    "ValidationFailed",
    "Violation",
    "Visibility",
    "VulnSource",
    "VulnerabilityRecord",
    "WeightageScore",
    "benchmark_from_dict",
    "benchmark_to_dict",
    "build_benchmark",
    "build_graph",
    "composite_score",
    "config_fingerprint",
    "config_from_dict",
    "config_to_dict",
    "decay_score",
    "default_config",
    "export_edge_list",
    "extend_graph_for_actor",
    "fetch_actor_snapshot",
    "final_reputation",
    "load_snapshot",
    "percentile",
    "report_to_dict",
    "score_actor",
    "score_all_signals",
    "score_population",
    "score_weightage",
    "severity_adherence",
    "usage_weight",
    "validate_snapshot",
    "write_snapshot",
    "zscore",
]
