"""Impact weightage: package usage, community tenure, graph centrality.

The three weightage components sit next to the seven security signals
and decide how much an actor's signal composite should count. A brand
new account with no used packages and no cross-project ties can look
spotless on signals; this is the part of the engine that says "spotless,
but nobody has ever relied on this person's work".
"""
from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from typing import Iterable, Mapping, Optional, Sequence

from .domain import ActorSnapshot, EngineConfig, EventKind
from .errors import InconsistentPopulation, UnknownActor
from .jsonio import days_between, format_utc
from .signals import usage_weight

W1_MEDIAN_EPSILON = 1e-9


@dataclass(frozen=True)
class GraphEdge:
    actor_a: str
    actor_b: str
    formed_at: datetime
    shared_projects: int


@dataclass(frozen=True)
class ContributionGraph:
    nodes: tuple[str, ...]
    edges: tuple[GraphEdge, ...]
    built_as_of: datetime

    def edges_of(self, actor_id: str) -> list[GraphEdge]:
        return [e for e in self.edges if actor_id in (e.actor_a, e.actor_b)]

    def degree(self, actor_id: str) -> int:
        return len(self.edges_of(actor_id))


@dataclass(frozen=True)
class TenureBreakdown:
    contrib_tenure: float
    account_tenure: float
    strength: float


@dataclass(frozen=True)
class WeightageScore:
    w1_usage: Optional[float]
    w2_tenure: float
    w2_breakdown: TenureBreakdown
    w3_centrality: float
    impact_factor: float


# ---------------------------------------------------------------------------
# contribution graph
# ---------------------------------------------------------------------------

def first_contribution_index(snapshots: Sequence[ActorSnapshot],
                             as_of: datetime) -> dict[str, dict[str, datetime]]:
    """project_id -> actor_id -> first contribution time, up to as_of.

    Also the population consistency gate: duplicate actor ids or a
    project claimed by two different owners abort with
    InconsistentPopulation.
    """
    seen_actors: set[str] = set()
    owners: dict[str, str] = {}
    index: dict[str, dict[str, datetime]] = {}

    for snapshot in snapshots:
        actor_id = snapshot.profile.actor_id
        if actor_id in seen_actors:
            raise InconsistentPopulation(f"duplicate actor_id {actor_id!r} in population")
        seen_actors.add(actor_id)

        for project in snapshot.owned_projects:
            _claim_owner(owners, project.project_id, project.owner_id)
        for ref in snapshot.external_project_refs:
            _claim_owner(owners, ref.project_id, ref.owner_id)

        for event in snapshot.contributions:
            if event.occurred_at > as_of:
                continue
            per_project = index.setdefault(event.project_id, {})
            current = per_project.get(actor_id)
            if current is None or event.occurred_at < current:
                per_project[actor_id] = event.occurred_at

    return index


def _claim_owner(owners: dict[str, str], project_id: str, owner_id: str) -> None:
    known = owners.get(project_id)
    if known is None:
        owners[project_id] = owner_id
    elif known != owner_id:
        raise InconsistentPopulation(
            f"project {project_id!r} claimed by owners {known!r} and {owner_id!r}")


def graph_from_index(index: Mapping[str, Mapping[str, datetime]],
                     nodes: Iterable[str],
                     as_of: datetime) -> ContributionGraph:
    """Assemble the co-contribution graph from a first-contribution index."""
    pair_formed: dict[tuple[str, str], datetime] = {}
    pair_shared: dict[tuple[str, str], int] = {}

    for contributors in index.values():
        actors = sorted(contributors)
        for i, left in enumerate(actors):
            for right in actors[i + 1:]:
                formed = max(contributors[left], contributors[right])
                key = (left, right)
                known = pair_formed.get(key)
                if known is None or formed < known:
                    pair_formed[key] = formed
                pair_shared[key] = pair_shared.get(key, 0) + 1

    edges = tuple(
        GraphEdge(a, b, pair_formed[(a, b)], pair_shared[(a, b)])
        for a, b in sorted(pair_formed)
    )
    return ContributionGraph(nodes=tuple(sorted(set(nodes))), edges=edges, built_as_of=as_of)


def build_graph(snapshots: Sequence[ActorSnapshot], as_of: datetime) -> ContributionGraph:
    """Co-contribution graph over a snapshot population."""
    index = first_contribution_index(snapshots, as_of)
    return graph_from_index(index, (s.profile.actor_id for s in snapshots), as_of)


def export_edge_list(graph: ContributionGraph) -> str:
    """Edge list as TSV: actor_a, actor_b, formed_at, shared_projects."""
    lines = ["actor_a\tactor_b\tformed_at\tshared_projects"]
    for edge in graph.edges:
        lines.append(f"{edge.actor_a}\t{edge.actor_b}\t"
                     f"{format_utc(edge.formed_at)}\t{edge.shared_projects}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# weightage components
# ---------------------------------------------------------------------------

def total_usage(snapshot: ActorSnapshot) -> float:
    return sum(usage_weight(p) for p in snapshot.owned_projects)


def population_median_usage(snapshots: Sequence[ActorSnapshot]) -> float:
    """Median total usage over actors that own at least one project."""
    totals = sorted(total_usage(s) for s in snapshots if s.owned_projects)
    if not totals:
        return 0.0
    mid = len(totals) // 2
    if len(totals) % 2 == 1:
        return totals[mid]
    return (totals[mid - 1] + totals[mid]) / 2.0


def w1_usage(snapshot: ActorSnapshot, cfg: EngineConfig,
             population_median: float) -> Optional[float]:
    """Saturating usage share relative to the population median."""
    if not snapshot.owned_projects:
        return None
    usage = total_usage(snapshot)
    return usage / (usage + max(population_median, W1_MEDIAN_EPSILON))


def w2_tenure(snapshot: ActorSnapshot, cfg: EngineConfig) -> tuple[float, TenureBreakdown]:
    """Mean of account tenure, external-contribution tenure, and strength."""
    profile = snapshot.profile
    as_of = profile.evaluated_as_of
    account_days = max(0.0, days_between(profile.account_created_at, as_of))
    account_tenure = min(1.0, account_days / cfg.tenure_full_days)

    owned = snapshot.owned_project_ids()
    external_events = [e for e in snapshot.contributions if e.project_id not in owned]

    first_external = min((e.occurred_at for e in external_events), default=None)
    if first_external is None:
        contrib_tenure = 0.0
    else:
        contrib_days = max(0.0, days_between(first_external, as_of))
        contrib_tenure = min(1.0, contrib_days / cfg.tenure_full_days)

    change_requests = sum(1 for e in external_events if e.kind == EventKind.CHANGE_REQUEST)
    issues = sum(1 for e in external_events if e.kind == EventKind.ISSUE)
    lines = sum(e.lines_changed for e in external_events)
    x = change_requests + issues + lines / 500.0
    strength = x / (x + cfg.strength_halfpoint)

    breakdown = TenureBreakdown(contrib_tenure=contrib_tenure,
                                account_tenure=account_tenure,
                                strength=strength)
    return (contrib_tenure + account_tenure + strength) / 3.0, breakdown


def w3_centrality(graph: ContributionGraph, actor_id: str, cfg: EngineConfig) -> float:
    """Normalized degree discounted by how young the ties are."""
    if actor_id not in graph.nodes:
        raise UnknownActor(f"actor {actor_id!r} is not in the contribution graph")
    edges = graph.edges_of(actor_id)
    n = len(graph.nodes)
    if not edges or n < 2:
        return 0.0
    degree_share = len(edges) / (n - 1)
    maturities = [
        min(1.0, max(0.0, days_between(e.formed_at, graph.built_as_of))
            / cfg.edge_maturity_days)
        for e in edges
    ]
    return degree_share * (sum(maturities) / len(maturities))


def impact_factor(w1: Optional[float], w2: float, w3: float, cfg: EngineConfig) -> float:
    """Convex blend of the three components; missing usage counts as zero."""
    lam1, lam2, lam3 = cfg.impact_lambdas
    return lam1 * (0.0 if w1 is None else w1) + lam2 * w2 + lam3 * w3


def score_weightage(snapshot: ActorSnapshot, graph: ContributionGraph,
                    cfg: EngineConfig, population_median: float) -> WeightageScore:
    """All weightage components for one actor."""
    w1 = w1_usage(snapshot, cfg, population_median)
    w2, breakdown = w2_tenure(snapshot, cfg)
    actor_id = snapshot.profile.actor_id
    w3 = w3_centrality(graph, actor_id, cfg) if actor_id in graph.nodes else 0.0
    return WeightageScore(
        w1_usage=w1,
        w2_tenure=w2,
        w2_breakdown=breakdown,
        w3_centrality=w3,
        impact_factor=impact_factor(w1, w2, w3, cfg),
    )
