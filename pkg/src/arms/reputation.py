"""Composite reputation, ecosystem benchmarking, flags, and advisories.

The base composite is a weight-renormalized mean over whichever signals
actually had data. The final reputation blends that composite with the
impact factor, floored so a strong posture is dampened but never erased
by a thin footprint. Actors are then positioned against an ecosystem
benchmark and checked for the history shapes that look like reputation
farming rather than organic participation.

Identity is assumed stable throughout: a compromised or impersonated
account carrying a genuinely earned history is out of scope here, which
is why no flag in the vocabulary claims to detect it.
"""
from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from typing import Mapping, Optional, Sequence

from .domain import (
    ActorSnapshot,
    EngineConfig,
    EventKind,
    Purpose,
    SIGNAL_IDS,
    Visibility,
    config_fingerprint,
)
from .errors import ConfigError, ConfigMismatch, DomainError, EmptyPopulation, ParseError
from .jsonio import days_between, format_utc, parse_utc
from .signals import SignalScore, score_all_signals
from .weighting import (
    ContributionGraph,
    WeightageScore,
    first_contribution_index,
    graph_from_index,
    population_median_usage,
    score_weightage,
    w3_centrality,
)

BENCHMARK_SCHEMA_VERSION = 1
REPORT_SCHEMA_VERSION = 1

# flag firing thresholds, fixed by contract rather than configuration
CROSS_PROJECT_MINIMUM = 2
SPARSE_HISTORY_EVENTS = 10
EARLY_CHANGE_REQUEST_WINDOW = 5
LOW_CENTRALITY_THRESHOLD = 0.1


class Flag(str, Enum):
    NEW_ACCOUNT = "NEW_ACCOUNT"
    NO_CROSS_PROJECT_HISTORY = "NO_CROSS_PROJECT_HISTORY"
    SPARSE_PUBLIC_HISTORY = "SPARSE_PUBLIC_HISTORY"
    FEATURE_ONLY_FIRST_CRS = "FEATURE_ONLY_FIRST_CRS"
    LOW_CENTRALITY = "LOW_CENTRALITY"
    LOW_VISIBILITY = "LOW_VISIBILITY"


# LOW_VISIBILITY describes a thin public footprint, not a spoof pattern,
# so it counts toward review but not toward the high-risk flag rule.
SPOOF_FLAG_SET = frozenset({
    Flag.NEW_ACCOUNT,
    Flag.NO_CROSS_PROJECT_HISTORY,
    Flag.SPARSE_PUBLIC_HISTORY,
    Flag.FEATURE_ONLY_FIRST_CRS,
    Flag.LOW_CENTRALITY,
})


class Advisory(str, Enum):
    ACCEPTABLE = "acceptable"
    REVIEW_REQUIRED = "review_required"
    HIGH_RISK = "high_risk"
    INSUFFICIENT_DATA = "insufficient_data"


@dataclass(frozen=True)
class SignalStats:
    mean: float
    median: float
    std: float
    n_with_data: int


@dataclass(frozen=True)
class CompositeStats:
    mean: float
    median: float
    std: float


@dataclass(frozen=True)
class ActorRow:
    actor_id: str
    base_composite: Optional[float]
    final_reputation: Optional[float]
    percentile: Optional[float]
    z_score: Optional[float]
    advisory: Advisory
    flags: tuple[Flag, ...]
    signal_values: Mapping[str, Optional[float]]
    w1_usage: Optional[float]
    w2_tenure: float
    w3_centrality: float
    impact_factor: float


@dataclass(frozen=True)
class EcosystemBenchmark:
    population_size: int
    per_signal_stats: Mapping[str, Optional[SignalStats]]
    composite_stats: CompositeStats
    sorted_composites: tuple[float, ...]
    built_at: datetime
    config_fingerprint: str
    population_median_usage: float
    project_first_contributions: Mapping[str, Mapping[str, datetime]]
    project_owners: Mapping[str, str]
    actor_rows: tuple[ActorRow, ...]


@dataclass(frozen=True)
class ReputationReport:
    actor_id: str
    signals: tuple[SignalScore, ...]
    weightage: WeightageScore
    base_composite: Optional[float]
    final_reputation: Optional[float]
    z_score: Optional[float]
    percentile: Optional[float]
    flags: tuple[Flag, ...]
    advisory: Advisory
    config_fingerprint: str


# ---------------------------------------------------------------------------
# composition
# ---------------------------------------------------------------------------

def composite_score(signals: Sequence[SignalScore], cfg: EngineConfig) -> Optional[float]:
    """Weighted mean of available signals, renormalized over their weights."""
    if all(cfg.signal_weights[sid] == 0.0 for sid in SIGNAL_IDS):
        raise ConfigError("all signal weights are zero")
    total_weight = 0.0
    total = 0.0
    for score in signals:
        if score.value is None:
            continue
        weight = cfg.signal_weights[score.signal_id]
        total_weight += weight
        total += weight * score.value
    if total_weight == 0.0:
        return None
    return total / total_weight


def final_reputation(base: float, impact: float, cfg: EngineConfig) -> float:
    """Blend the composite with impact, floored at impact_floor."""
    if not 0.0 <= base <= 1.0:
        raise DomainError(f"base composite {base} outside [0, 1]")
    if not 0.0 <= impact <= 1.0:
        raise DomainError(f"impact factor {impact} outside [0, 1]")
    gamma = cfg.impact_floor
    return base * (gamma + (1.0 - gamma) * impact)


# ---------------------------------------------------------------------------
# benchmark positioning
# ---------------------------------------------------------------------------

def percentile(benchmark: EcosystemBenchmark, value: float) -> float:
    """Midrank percentile of value within the benchmark sample."""
    sample = benchmark.sorted_composites
    below = bisect_left(sample, value)
    equal = bisect_right(sample, value) - below
    return (below + 0.5 * equal) / len(sample)


def zscore(benchmark: EcosystemBenchmark, value: float) -> Optional[float]:
    """Standard score against the sample; None for a degenerate sample."""
    std = benchmark.composite_stats.std
    if std == 0.0:
        return None
    return (value - benchmark.composite_stats.mean) / std


def _stats(values: Sequence[float]) -> tuple[float, float, float]:
    # summed over the sorted sample so input order cannot perturb the floats
    ordered = sorted(values)
    n = len(ordered)
    mean = sum(ordered) / n
    mid = n // 2
    median = ordered[mid] if n % 2 == 1 else (ordered[mid - 1] + ordered[mid]) / 2.0
    variance = sum((v - mean) ** 2 for v in ordered) / n
    return mean, median, math.sqrt(variance)


# ---------------------------------------------------------------------------
# flags and advisory
# ---------------------------------------------------------------------------

def spoof_flags(snapshot: ActorSnapshot, graph: Optional[ContributionGraph],
                cfg: EngineConfig) -> tuple[Flag, ...]:
    """History shapes associated with farmed or hollow reputations."""
    flags: list[Flag] = []
    profile = snapshot.profile
    account_age = days_between(profile.account_created_at, profile.evaluated_as_of)
    owned = snapshot.owned_project_ids()
    private_owned = {p.project_id for p in snapshot.owned_projects
                     if p.visibility == Visibility.PRIVATE}

    if account_age < cfg.tenure_full_days:
        flags.append(Flag.NEW_ACCOUNT)

    external_projects = {e.project_id for e in snapshot.contributions
                         if e.project_id not in owned}
    if len(external_projects) < CROSS_PROJECT_MINIMUM:
        flags.append(Flag.NO_CROSS_PROJECT_HISTORY)

    public_events = sum(1 for e in snapshot.contributions
                        if e.project_id not in private_owned)
    if public_events < SPARSE_HISTORY_EVENTS:
        flags.append(Flag.SPARSE_PUBLIC_HISTORY)

    change_requests = sorted(
        (e for e in snapshot.contributions if e.kind == EventKind.CHANGE_REQUEST),
        key=lambda e: (e.occurred_at, e.event_id))
    window = change_requests[:min(EARLY_CHANGE_REQUEST_WINDOW, len(change_requests))]
    if window and all(e.purpose == Purpose.FEATURE for e in window):
        flags.append(Flag.FEATURE_ONLY_FIRST_CRS)

    if graph is not None and profile.actor_id in graph.nodes:
        if w3_centrality(graph, profile.actor_id, cfg) < LOW_CENTRALITY_THRESHOLD:
            flags.append(Flag.LOW_CENTRALITY)

    if not snapshot.owned_projects and account_age >= cfg.tenure_full_days:
        flags.append(Flag.LOW_VISIBILITY)

    return tuple(flags)


def advise(base_composite: Optional[float], percentile_value: Optional[float],
           flags: Sequence[Flag], cfg: EngineConfig) -> Advisory:
    """Map composite, benchmark position, and flags to a recommendation."""
    if base_composite is None:
        return Advisory.INSUFFICIENT_DATA
    adv = cfg.advisory
    spoof_count = sum(1 for f in flags if f in SPOOF_FLAG_SET)
    ranked = percentile_value is not None
    if (ranked and percentile_value < adv.high_risk_percentile) \
            or spoof_count >= adv.high_risk_flag_count:
        return Advisory.HIGH_RISK
    if (ranked and percentile_value < adv.review_percentile) \
            or len(flags) >= adv.review_flag_count:
        return Advisory.REVIEW_REQUIRED
    return Advisory.ACCEPTABLE


# ---------------------------------------------------------------------------
# scoring pipelines
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BaseScore:
    actor_id: str
    signals: tuple[SignalScore, ...]
    weightage: WeightageScore
    base_composite: Optional[float]
    final_reputation: Optional[float]


def base_score(snapshot: ActorSnapshot, graph: ContributionGraph, cfg: EngineConfig,
               population_median: float) -> BaseScore:
    """Signals plus weightage plus composite for one actor, no benchmark yet."""
    signals = score_all_signals(snapshot, cfg)
    weightage = score_weightage(snapshot, graph, cfg, population_median)
    base = composite_score(signals, cfg)
    final = None if base is None else final_reputation(base, weightage.impact_factor, cfg)
    return BaseScore(snapshot.profile.actor_id, signals, weightage, base, final)


def score_population(snapshots: Sequence[ActorSnapshot],
                     cfg: EngineConfig) -> tuple[EcosystemBenchmark, list[ReputationReport]]:
    """Score a whole population and build its benchmark in one pass."""
    if not snapshots:
        raise EmptyPopulation("no snapshots supplied")
    as_of = max(s.profile.evaluated_as_of for s in snapshots)
    index = first_contribution_index(snapshots, as_of)
    owners: dict[str, str] = {}
    for snapshot in snapshots:
        for project in snapshot.owned_projects:
            owners.setdefault(project.project_id, project.owner_id)
        for ref in snapshot.external_project_refs:
            owners.setdefault(ref.project_id, ref.owner_id)
    graph = graph_from_index(index, (s.profile.actor_id for s in snapshots), as_of)
    median = population_median_usage(snapshots)

    bases = [base_score(s, graph, cfg, median) for s in snapshots]
    benchmark = build_benchmark(bases, cfg,
                                built_at=as_of,
                                population_median=median,
                                project_first_contributions=index,
                                project_owners=owners)

    reports = [_finish_report(snapshot, base, graph, benchmark, cfg)
               for snapshot, base in zip(snapshots, bases)]
    benchmark = _with_rows(benchmark, reports)
    return benchmark, reports


def build_benchmark(bases: Sequence[BaseScore], cfg: EngineConfig, *,
                    built_at: datetime,
                    population_median: float,
                    project_first_contributions: Mapping[str, Mapping[str, datetime]],
                    project_owners: Mapping[str, str]) -> EcosystemBenchmark:
    """Population statistics from per-actor base scores."""
    finals = [b.final_reputation for b in bases if b.final_reputation is not None]
    if not finals:
        raise EmptyPopulation("no actor produced a usable composite")
    mean, median, std = _stats(finals)

    per_signal: dict[str, Optional[SignalStats]] = {}
    for position, signal_id in enumerate(SIGNAL_IDS):
        values = [b.signals[position].value for b in bases
                  if b.signals[position].value is not None]
        if values:
            s_mean, s_median, s_std = _stats(values)
            per_signal[signal_id] = SignalStats(s_mean, s_median, s_std, len(values))
        else:
            per_signal[signal_id] = None

    return EcosystemBenchmark(
        population_size=len(bases),
        per_signal_stats=per_signal,
        composite_stats=CompositeStats(mean, median, std),
        sorted_composites=tuple(sorted(finals)),
        built_at=built_at,
        config_fingerprint=config_fingerprint(cfg),
        population_median_usage=population_median,
        project_first_contributions=project_first_contributions,
        project_owners=project_owners,
        actor_rows=(),
    )


def _finish_report(snapshot: ActorSnapshot, base: BaseScore,
                   graph: Optional[ContributionGraph], benchmark: EcosystemBenchmark,
                   cfg: EngineConfig) -> ReputationReport:
    flags = spoof_flags(snapshot, graph, cfg)
    if base.final_reputation is None:
        pct = None
        z = None
    else:
        pct = percentile(benchmark, base.final_reputation)
        z = zscore(benchmark, base.final_reputation)
    return ReputationReport(
        actor_id=base.actor_id,
        signals=base.signals,
        weightage=base.weightage,
        base_composite=base.base_composite,
        final_reputation=base.final_reputation,
        z_score=z,
        percentile=pct,
        flags=flags,
        advisory=advise(base.base_composite, pct, flags, cfg),
        config_fingerprint=benchmark.config_fingerprint,
    )


def _with_rows(benchmark: EcosystemBenchmark,
               reports: Sequence[ReputationReport]) -> EcosystemBenchmark:
    rows = tuple(
        ActorRow(
            actor_id=r.actor_id,
            base_composite=r.base_composite,
            final_reputation=r.final_reputation,
            percentile=r.percentile,
            z_score=r.z_score,
            advisory=r.advisory,
            flags=r.flags,
            signal_values={s.signal_id: s.value for s in r.signals},
            w1_usage=r.weightage.w1_usage,
            w2_tenure=r.weightage.w2_tenure,
            w3_centrality=r.weightage.w3_centrality,
            impact_factor=r.weightage.impact_factor,
        )
        for r in reports
    )
    return EcosystemBenchmark(
        population_size=benchmark.population_size,
        per_signal_stats=benchmark.per_signal_stats,
        composite_stats=benchmark.composite_stats,
        sorted_composites=benchmark.sorted_composites,
        built_at=benchmark.built_at,
        config_fingerprint=benchmark.config_fingerprint,
        population_median_usage=benchmark.population_median_usage,
        project_first_contributions=benchmark.project_first_contributions,
        project_owners=benchmark.project_owners,
        actor_rows=rows,
    )


def extend_graph_for_actor(snapshot: ActorSnapshot,
                           benchmark: EcosystemBenchmark) -> ContributionGraph:
    """Population graph grown by one actor's contribution history.

    Uses the first-contribution index persisted with the benchmark, so
    scoring a new actor does not need the population snapshots. The
    scoring instant is the actor's own evaluated_as_of.
    """
    as_of = snapshot.profile.evaluated_as_of
    index: dict[str, dict[str, datetime]] = {}
    for project_id, contributors in benchmark.project_first_contributions.items():
        kept = {actor: first for actor, first in contributors.items() if first <= as_of}
        if kept:
            index[project_id] = kept

    own = first_contribution_index([snapshot], as_of)
    for project_id, contributors in own.items():
        index.setdefault(project_id, {}).update(contributors)

    nodes = set(a for contributors in benchmark.project_first_contributions.values()
                for a in contributors)
    nodes.update(row.actor_id for row in benchmark.actor_rows)
    nodes.add(snapshot.profile.actor_id)
    return graph_from_index(index, nodes, as_of)


def score_actor(snapshot: ActorSnapshot, graph: ContributionGraph,
                benchmark: EcosystemBenchmark, cfg: EngineConfig) -> ReputationReport:
    """Score one actor against an existing benchmark."""
    fingerprint = config_fingerprint(cfg)
    if fingerprint != benchmark.config_fingerprint:
        raise ConfigMismatch(
            f"active config {fingerprint[:12]} does not match benchmark "
            f"{benchmark.config_fingerprint[:12]}")
    base = base_score(snapshot, graph, cfg, benchmark.population_median_usage)
    return _finish_report(snapshot, base, graph, benchmark, cfg)


# ---------------------------------------------------------------------------
# document serialization
# ---------------------------------------------------------------------------

def report_to_dict(report: ReputationReport) -> dict:
    weightage = report.weightage
    return {
        "report_schema_version": REPORT_SCHEMA_VERSION,
        "actor_id": report.actor_id,
        "signals": [
            {
                "signal_id": s.signal_id,
                "value": s.value,
                "sub_scores": dict(s.sub_scores),
                "evidence": [[record_id, contribution]
                             for record_id, contribution in s.evidence],
            }
            for s in report.signals
        ],
        "weightage": {
            "w1_usage": weightage.w1_usage,
            "w2_tenure": weightage.w2_tenure,
            "w2_breakdown": {
                "contrib_tenure": weightage.w2_breakdown.contrib_tenure,
                "account_tenure": weightage.w2_breakdown.account_tenure,
                "strength": weightage.w2_breakdown.strength,
            },
            "w3_centrality": weightage.w3_centrality,
            "impact_factor": weightage.impact_factor,
        },
        "base_composite": report.base_composite,
        "final_reputation": report.final_reputation,
        "z_score": report.z_score,
        "percentile": report.percentile,
        "flags": [f.value for f in report.flags],
        "advisory": report.advisory.value,
        "config_fingerprint": report.config_fingerprint,
    }


def benchmark_to_dict(benchmark: EcosystemBenchmark) -> dict:
    return {
        "benchmark_schema_version": BENCHMARK_SCHEMA_VERSION,
        "population_size": benchmark.population_size,
        "built_at": format_utc(benchmark.built_at),
        "config_fingerprint": benchmark.config_fingerprint,
        "population_median_usage": benchmark.population_median_usage,
        "per_signal_stats": {
            signal_id: None if stats is None else {
                "mean": stats.mean,
                "median": stats.median,
                "std": stats.std,
                "n_with_data": stats.n_with_data,
            }
            for signal_id, stats in benchmark.per_signal_stats.items()
        },
        "composite_stats": {
            "mean": benchmark.composite_stats.mean,
            "median": benchmark.composite_stats.median,
            "std": benchmark.composite_stats.std,
        },
        "sorted_composites": list(benchmark.sorted_composites),
        "project_first_contributions": {
            project_id: {actor: format_utc(first) for actor, first in contributors.items()}
            for project_id, contributors in benchmark.project_first_contributions.items()
        },
        "project_owners": dict(benchmark.project_owners),
        "actors": [
            {
                "actor_id": row.actor_id,
                "base_composite": row.base_composite,
                "final_reputation": row.final_reputation,
                "percentile": row.percentile,
                "z_score": row.z_score,
                "advisory": row.advisory.value,
                "flags": [f.value for f in row.flags],
                "signal_values": dict(row.signal_values),
                "w1_usage": row.w1_usage,
                "w2_tenure": row.w2_tenure,
                "w3_centrality": row.w3_centrality,
                "impact_factor": row.impact_factor,
            }
            for row in benchmark.actor_rows
        ],
    }


def benchmark_from_dict(payload: Mapping) -> EcosystemBenchmark:
    try:
        version = payload["benchmark_schema_version"]
        if version != BENCHMARK_SCHEMA_VERSION:
            raise ParseError(f"benchmark schema version {version} not supported")
        per_signal: dict[str, Optional[SignalStats]] = {}
        for signal_id in SIGNAL_IDS:
            raw = payload["per_signal_stats"].get(signal_id)
            per_signal[signal_id] = None if raw is None else SignalStats(
                mean=float(raw["mean"]), median=float(raw["median"]),
                std=float(raw["std"]), n_with_data=int(raw["n_with_data"]))
        comp = payload["composite_stats"]
        rows = tuple(
            ActorRow(
                actor_id=raw["actor_id"],
                base_composite=raw["base_composite"],
                final_reputation=raw["final_reputation"],
                percentile=raw["percentile"],
                z_score=raw["z_score"],
                advisory=Advisory(raw["advisory"]),
                flags=tuple(Flag(f) for f in raw["flags"]),
                signal_values=dict(raw["signal_values"]),
                w1_usage=raw["w1_usage"],
                w2_tenure=raw["w2_tenure"],
                w3_centrality=raw["w3_centrality"],
                impact_factor=raw["impact_factor"],
            )
            for raw in payload.get("actors", [])
        )
        return EcosystemBenchmark(
            population_size=int(payload["population_size"]),
            per_signal_stats=per_signal,
            composite_stats=CompositeStats(
                mean=float(comp["mean"]), median=float(comp["median"]),
                std=float(comp["std"])),
            sorted_composites=tuple(float(v) for v in payload["sorted_composites"]),
            built_at=parse_utc(payload["built_at"]),
            config_fingerprint=str(payload["config_fingerprint"]),
            population_median_usage=float(payload["population_median_usage"]),
            project_first_contributions={
                project_id: {actor: parse_utc(first) for actor, first in contributors.items()}
                for project_id, contributors in payload["project_first_contributions"].items()
            },
            project_owners=dict(payload["project_owners"]),
            actor_rows=rows,
        )
    except ParseError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad benchmark document: {exc}") from None
