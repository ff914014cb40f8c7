"""Desk-scale effectiveness evaluation for the scoring engine.

Generates labeled synthetic actor populations (genuine maintainers,
inexperienced contributors, reputation spoofers), scores them with the
real pipeline, and fits a logistic model from signal values to sampled
incident labels to check which signals carry predictive weight. The
fitted coefficients can be exported as a signal-weight overlay that the
scoring config accepts directly.

Everything here is deterministic given (params, counts, seed). Draws are
built on random.Random().random() only, the one stdlib generator method
with a cross-version stability guarantee, so pinned digests hold.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from enum import Enum
from typing import Callable, Mapping, NamedTuple, Optional, Sequence

import numpy as np

from .domain import (
    ActorProfile,
    ActorSnapshot,
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
    Visibility,
    VulnerabilityRecord,
    VulnSource,
    snapshot_to_dict,
)
from .errors import DegenerateLabels, DimensionMismatch, DomainError, EmptyCell
from .jsonio import canonical_bytes, sha256_hex
from .reputation import score_population

AS_OF = datetime(2024, 6, 1, tzinfo=timezone.utc)
NEUTRAL_FEATURE = 0.5  # imputed where a signal had no data
MIN_OVERLAY_WEIGHT = 0.05

ARCHETYPES = ("genuine", "inexperienced", "spoofer")

# shared external projects that give the ecosystem its connective tissue
HUB_POOL = tuple(f"hub-{k:02d}/pkg-{k:02d}" for k in range(12))
FRINGE_POOL = tuple(f"fringe-{k:02d}/staging-{k:02d}" for k in range(30))


@dataclass(frozen=True)
class ArchetypeParams:
    archetype: str
    adherence_distributions: Mapping[str, tuple[float, float]]
    tenure_days_range: tuple[float, float]
    external_project_count_range: tuple[int, int]
    first_cr_purpose_bias: float
    owned_project_usage_range: tuple[int, int]
    owned_project_count_range: tuple[int, int] = (1, 3)
    external_pool: tuple[str, ...] = HUB_POOL
    event_count_range: tuple[int, int] = (10, 40)


@dataclass(frozen=True)
class LabeledPopulation:
    snapshots: tuple[ActorSnapshot, ...]
    labels: Mapping[str, str]
    incidents: Mapping[str, bool]
    seed: int


def default_archetypes() -> dict[str, ArchetypeParams]:
    beta = lambda a, b: {sid: (a, b) for sid in SIGNAL_IDS}
    return {
        "genuine": ArchetypeParams(
            archetype="genuine",
            adherence_distributions=beta(8.0, 2.0),
            tenure_days_range=(730.0, 3650.0),
            external_project_count_range=(2, 6),
            first_cr_purpose_bias=0.3,
            owned_project_usage_range=(20, 400),
            owned_project_count_range=(2, 4),
            event_count_range=(20, 60),
        ),
        "inexperienced": ArchetypeParams(
            archetype="inexperienced",
            adherence_distributions=beta(2.0, 6.0),
            tenure_days_range=(200.0, 1500.0),
            external_project_count_range=(1, 4),
            first_cr_purpose_bias=0.5,
            owned_project_usage_range=(0, 30),
            owned_project_count_range=(1, 3),
            event_count_range=(6, 30),
        ),
        "spoofer": ArchetypeParams(
            archetype="spoofer",
            adherence_distributions=beta(9.0, 1.0),
            tenure_days_range=(60.0, 330.0),
            external_project_count_range=(0, 1),
            first_cr_purpose_bias=0.95,
            owned_project_usage_range=(0, 3),
            owned_project_count_range=(1, 2),
            external_pool=FRINGE_POOL,
            event_count_range=(3, 8),
        ),
    }


# ---------------------------------------------------------------------------
# primitive draws pinned to rng.random()
# ---------------------------------------------------------------------------

def _uniform(rng: random.Random, lo: float, hi: float) -> float:
    return lo + (hi - lo) * rng.random()


def _rint(rng: random.Random, lo: int, hi: int) -> int:
    # inclusive bounds
    return lo + int(rng.random() * (hi - lo + 1)) if hi > lo else lo


def _bernoulli(rng: random.Random, p: float) -> bool:
    return rng.random() < p


def _pick(rng: random.Random, seq: Sequence):
    return seq[int(rng.random() * len(seq)) % len(seq)]


def _beta(rng: random.Random, a: float, b: float) -> float:
    """Johnk's beta sampler over rng.random(); slow but version-proof."""
    while True:
        x = rng.random() ** (1.0 / a)
        y = rng.random() ** (1.0 / b)
        if x + y <= 1.0 and (x + y) > 0.0:
            return x / (x + y)


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


def _at(days_before_as_of: float) -> datetime:
    return AS_OF - timedelta(seconds=int(days_before_as_of * 86400))


# ---------------------------------------------------------------------------
# population generation
# ---------------------------------------------------------------------------

def generate_population(params: Mapping[str, ArchetypeParams],
                        counts: Mapping[str, int],
                        seed: int,
                        incident_slope: float = -6.0,
                        incident_intercept: float = 2.5) -> LabeledPopulation:
    """Deterministic labeled population; incidents follow a logistic link
    on each actor's mean drawn adherence (lower adherence, more incidents)."""
    snapshots: list[ActorSnapshot] = []
    labels: dict[str, str] = {}
    incidents: dict[str, bool] = {}

    for arch_index, archetype in enumerate(sorted(counts)):
        if archetype not in params:
            raise DomainError(f"no ArchetypeParams for {archetype!r}")
        spec = params[archetype]
        for i in range(counts[archetype]):
            rng = random.Random(seed * 1_000_003 + arch_index * 10_007 + i)
            actor_id = f"{archetype}-{i:03d}"
            snapshot, mean_adherence = _generate_actor(rng, actor_id, spec)
            p_incident = _sigmoid(incident_intercept + incident_slope * mean_adherence)
            snapshots.append(snapshot)
            labels[actor_id] = archetype
            incidents[actor_id] = rng.random() < p_incident

    snapshots.sort(key=lambda s: s.profile.actor_id)
    return LabeledPopulation(tuple(snapshots), labels, incidents, seed)


def _generate_actor(rng: random.Random, actor_id: str,
                    spec: ArchetypeParams) -> tuple[ActorSnapshot, float]:
    adherence = {sid: _beta(rng, *spec.adherence_distributions[sid])
                 for sid in SIGNAL_IDS}
    tenure = _uniform(rng, *spec.tenure_days_range)
    created = _at(tenure)

    projects: list[ProjectRecord] = []
    vulns: list[VulnerabilityRecord] = []
    events: list[ContributionEvent] = []
    event_n = 0
    vuln_n = 0

    n_projects = _rint(rng, *spec.owned_project_count_range)
    for j in range(n_projects):
        project_id = f"{actor_id}/proj-{j}"
        age = _uniform(rng, 10.0, max(11.0, tenure - 10.0))
        project_created = _at(min(age, tenure - 1.0))
        p_vulns, p_project, n_own_events = _generate_project(
            rng, actor_id, project_id, project_created, adherence,
            spec.owned_project_usage_range, vuln_n)
        vuln_n += len(p_vulns)
        vulns.extend(p_vulns)
        projects.append(p_project)
        # commits to the actor's own project
        span = max(1.0, min(age, tenure - 1.0) - 0.5)
        for _ in range(n_own_events):
            offset = _uniform(rng, 0.0, span)
            events.append(ContributionEvent(
                event_id=f"{actor_id}-e{event_n}",
                actor_id=actor_id,
                project_id=project_id,
                kind=EventKind.COMMIT,
                occurred_at=_at(offset),
                lines_changed=_rint(rng, 5, 400),
                purpose=_pick(rng, (Purpose.FEATURE, Purpose.FIX, Purpose.OTHER)),
                is_first_contribution_to_project=False,
            ))
            event_n += 1

    n_external = _rint(rng, *spec.external_project_count_range)
    pool = list(spec.external_pool)
    externals: list[str] = []
    for _ in range(min(n_external, len(pool))):
        choice = _pick(rng, pool)
        pool.remove(choice)
        externals.append(choice)

    total_events = _rint(rng, *spec.event_count_range)
    n_ext_events = min(total_events, max(len(externals), total_events // 2)) \
        if externals else 0
    # spoofers concentrate their public activity in a recent burst
    recency_cap = min(tenure - 1.0, 90.0) if tenure < 365.0 else tenure * 0.9
    for k in range(n_ext_events):
        project_id = externals[k % len(externals)]
        kind_draw = rng.random()
        if kind_draw < 0.45:
            kind = EventKind.CHANGE_REQUEST
        elif kind_draw < 0.7:
            kind = EventKind.ISSUE
        elif kind_draw < 0.85:
            kind = EventKind.REVIEW
        else:
            kind = EventKind.COMMIT
        if kind == EventKind.CHANGE_REQUEST and _bernoulli(rng, spec.first_cr_purpose_bias):
            purpose = Purpose.FEATURE
        else:
            purpose = _pick(rng, (Purpose.FIX, Purpose.FEATURE, Purpose.DOCS, Purpose.OTHER))
        events.append(ContributionEvent(
            event_id=f"{actor_id}-e{event_n}",
            actor_id=actor_id,
            project_id=project_id,
            kind=kind,
            occurred_at=_at(_uniform(rng, 0.5, max(1.0, recency_cap))),
            lines_changed=_rint(rng, 0, 600) if kind != EventKind.ISSUE else 0,
            purpose=purpose,
            is_first_contribution_to_project=False,
        ))
        event_n += 1

    # mark the earliest event per project
    firsts: dict[str, ContributionEvent] = {}
    for event in events:
        known = firsts.get(event.project_id)
        if known is None or (event.occurred_at, event.event_id) < (known.occurred_at,
                                                                   known.event_id):
            firsts[event.project_id] = event
    marked = tuple(
        ContributionEvent(
            event_id=e.event_id, actor_id=e.actor_id, project_id=e.project_id,
            kind=e.kind, occurred_at=e.occurred_at, lines_changed=e.lines_changed,
            purpose=e.purpose,
            is_first_contribution_to_project=(firsts[e.project_id].event_id == e.event_id),
        )
        for e in sorted(events, key=lambda e: (e.occurred_at, e.event_id))
    )

    refs = tuple(ExternalProjectRef(project_id=p, owner_id=p.split("/", 1)[0])
                 for p in sorted(set(externals)))
    snapshot = ActorSnapshot(
        schema_version=SCHEMA_VERSION,
        profile=ActorProfile(actor_id=actor_id, login=actor_id,
                             account_created_at=created, evaluated_as_of=AS_OF),
        owned_projects=tuple(sorted(projects, key=lambda p: p.project_id)),
        contributions=marked,
        external_project_refs=refs,
        vulnerabilities=tuple(sorted(vulns, key=lambda v: v.vuln_id)),
    )
    mean_adherence = sum(adherence.values()) / len(adherence)
    return snapshot, mean_adherence


def _generate_project(rng: random.Random, actor_id: str, project_id: str,
                      project_created: datetime, adherence: Mapping[str, float],
                      usage_range: tuple[int, int],
                      vuln_start: int) -> tuple[list, ProjectRecord, int]:
    stars = _rint(rng, *usage_range)
    forks = int(stars * _uniform(rng, 0.0, 0.3))
    downloads = int(stars * _uniform(rng, 0.0, 30.0))
    visibility = Visibility.PRIVATE if _bernoulli(rng, 0.1) else Visibility.PUBLIC

    n_branches = _rint(rng, 1, 4)
    branches = [BranchRecord(name="main", is_default=True,
                             is_protected=_bernoulli(rng, adherence["S5"]))]
    for b in range(1, n_branches):
        branches.append(BranchRecord(name=f"dev-{b}", is_default=False,
                                     is_protected=_bernoulli(rng, adherence["S5"] * 0.7)))

    dep_enabled = _bernoulli(rng, adherence["S3"])
    code_enabled = _bernoulli(rng, adherence["S3"])
    feats = SecurityFeatureState(
        dependency_alerts_enabled=dep_enabled,
        dependency_alerts_open=_rint(rng, 0, 3) if dep_enabled else 0,
        dependency_alerts_resolved=_rint(rng, 0, 6) if dep_enabled else 0,
        secret_scanning_enabled=_bernoulli(rng, adherence["S3"]),
        code_scanning_enabled=code_enabled,
        code_scan_alerts_open=_rint(rng, 0, 2) if code_enabled else 0,
        code_scan_alerts_resolved=_rint(rng, 0, 5) if code_enabled else 0,
        push_protection_enabled=_bernoulli(rng, adherence["S3"]),
        integrity_guarantee=_bernoulli(rng, adherence["S4"]),
        private_vuln_reporting_or_policy=_bernoulli(rng, adherence["S6"]),
    )
    workflow_count = _rint(rng, 1, 4) if _bernoulli(rng, adherence["S7"]) else 0

    project_age = max(1.0, (AS_OF - project_created).total_seconds() / 86400.0)
    vulns: list[VulnerabilityRecord] = []
    vuln_n = vuln_start

    dependencies: list[DependencyRecord] = []
    for d in range(_rint(rng, 2, 8)):
        known: tuple[str, ...] = ()
        if _bernoulli(rng, 0.5 * (1.0 - adherence["S2"])):
            vuln_id = f"{actor_id}-v{vuln_n}"
            vuln_n += 1
            vulns.append(_make_vuln(rng, vuln_id, project_id, project_age,
                                    adherence["S2"], VulnSource.DEPENDENCY, None))
            known = (vuln_id,)
        dependencies.append(DependencyRecord(name=f"dep-{d}", version="1.0.0",
                                             known_vulns=known))

    for _ in range(2):
        if _bernoulli(rng, 0.5 * (1.0 - adherence["S1"])):
            vuln_id = f"{actor_id}-v{vuln_n}"
            vuln_n += 1
            vulns.append(_make_vuln(rng, vuln_id, project_id, project_age,
                                    adherence["S1"], VulnSource.DIRECT, actor_id))

    project = ProjectRecord(
        project_id=project_id,
        owner_id=actor_id,
        visibility=visibility,
        created_at=project_created,
        stars=stars,
        forks=forks,
        downloads=downloads,
        branches=tuple(branches),
        security_features=feats,
        workflow_count=workflow_count,
        dependencies=tuple(dependencies),
    )
    return vulns, project, _rint(rng, 2, 8)


def _make_vuln(rng: random.Random, vuln_id: str, project_id: str, project_age: float,
               adherence: float, source: VulnSource,
               introduced_by: Optional[str]) -> VulnerabilityRecord:
    severity = _pick(rng, (Severity.LOW, Severity.MEDIUM, Severity.HIGH, Severity.CRITICAL))
    reported_days_ago = _uniform(rng, 1.0, max(2.0, project_age - 1.0))
    reported = _at(reported_days_ago)
    deadline = {"low": 90.0, "medium": 30.0, "high": 14.0, "critical": 7.0}[severity.value]
    if _bernoulli(rng, 1.0 - 0.6 * (1.0 - adherence)):
        delay = deadline * (0.2 + 3.0 * (1.0 - adherence) * rng.random())
        fixed = min(reported + timedelta(seconds=int(delay * 86400)), AS_OF)
    else:
        fixed = None
    return VulnerabilityRecord(
        vuln_id=vuln_id,
        project_id=project_id,
        severity=severity,
        source=source,
        reported_at=reported,
        fixed_at=fixed,
        introduced_by=introduced_by,
        introducing_event=None,
    )


def population_digest(population: LabeledPopulation) -> str:
    """Content hash of the whole labeled population."""
    doc = {
        "seed": population.seed,
        "actors": [
            {
                "archetype": population.labels[s.profile.actor_id],
                "incident": population.incidents[s.profile.actor_id],
                "snapshot": snapshot_to_dict(s),
            }
            for s in population.snapshots
        ],
    }
    return sha256_hex(canonical_bytes(doc))


# ---------------------------------------------------------------------------
# logistic regression, from scratch on purpose
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FitOptions:
    max_iterations: int = 5000
    grad_tol: float = 1e-6
    step_scale: float = 1.0
    record_trace: bool = False


@dataclass(frozen=True)
class LogisticModel:
    coefficients: tuple[float, ...]
    feature_names: tuple[str, ...]
    base_feature_count: int
    with_interactions: bool
    l2_penalty: float
    converged: bool
    iterations: int
    final_loss: float
    loss_trace: tuple[float, ...] = ()


def _interaction_names(names: Sequence[str]) -> list[str]:
    out = []
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            out.append(f"{names[i]}*{names[j]}")
    return out


def _expand(features: np.ndarray, with_interactions: bool) -> np.ndarray:
    n, d = features.shape
    columns = [np.ones((n, 1)), features]
    if with_interactions:
        products = [features[:, i:i + 1] * features[:, j:j + 1]
                    for i in range(d) for j in range(i + 1, d)]
        if products:
            columns.append(np.hstack(products))
    return np.hstack(columns)


def _loss_and_grad(design: np.ndarray, labels: np.ndarray, l2: float,
                   weights: np.ndarray) -> tuple[float, np.ndarray]:
    z = design @ weights
    # log(1 + e^z) - y z, computed stably
    loss = float(np.mean(np.logaddexp(0.0, z) - labels * z))
    penalized = weights.copy()
    penalized[0] = 0.0
    loss += 0.5 * l2 * float(penalized @ penalized)
    probs = 1.0 / (1.0 + np.exp(-z))
    grad = design.T @ (probs - labels) / design.shape[0] + l2 * penalized
    return loss, grad


def fit_logistic(features, labels, l2: float = 0.0, with_interactions: bool = False,
                 opts: FitOptions = FitOptions(),
                 feature_names: Optional[Sequence[str]] = None) -> LogisticModel:
    """Plain gradient descent from zero init with a data-derived fixed step.

    The step is 1/L for the smoothness bound L of the penalized mean
    cross-entropy, which makes the loss trace provably non-increasing.
    """
    x = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=float)
    if x.ndim != 2:
        raise DimensionMismatch("features must be a 2-d array")
    if y.ndim != 1 or y.shape[0] != x.shape[0]:
        raise DimensionMismatch(
            f"labels length {y.shape} does not match {x.shape[0]} feature rows")
    if not np.isfinite(x).all():
        raise DomainError("features must be finite")
    if set(np.unique(y)) - {0.0, 1.0}:
        raise DomainError("labels must be 0/1")
    if len(np.unique(y)) < 2:
        raise DegenerateLabels("labels contain a single class")
    if l2 < 0:
        raise DomainError("l2 penalty must be >= 0")

    base_names = tuple(feature_names) if feature_names is not None \
        else tuple(f"f{i}" for i in range(x.shape[1]))
    if len(base_names) != x.shape[1]:
        raise DimensionMismatch("feature_names length does not match feature columns")
    names = ("intercept",) + base_names
    if with_interactions:
        names = names + tuple(_interaction_names(base_names))

    design = _expand(x, with_interactions)
    n = design.shape[0]
    gram = design.T @ design
    lipschitz = float(np.linalg.eigvalsh(gram)[-1]) / (4.0 * n) + l2
    step = opts.step_scale / max(lipschitz, 1e-12)

    weights = np.zeros(design.shape[1])
    trace: list[float] = []
    converged = False
    iterations = 0
    loss, grad = _loss_and_grad(design, y, l2, weights)
    if opts.record_trace:
        trace.append(loss)
    for iterations in range(1, opts.max_iterations + 1):
        if float(np.linalg.norm(grad)) < opts.grad_tol:
            converged = True
            iterations -= 1
            break
        weights = weights - step * grad
        loss, grad = _loss_and_grad(design, y, l2, weights)
        if opts.record_trace:
            trace.append(loss)
    else:
        converged = float(np.linalg.norm(grad)) < opts.grad_tol

    return LogisticModel(
        coefficients=tuple(float(w) for w in weights),
        feature_names=names,
        base_feature_count=x.shape[1],
        with_interactions=with_interactions,
        l2_penalty=l2,
        converged=converged,
        iterations=iterations,
        final_loss=loss,
        loss_trace=tuple(trace),
    )


def predict_logistic(model: LogisticModel, row) -> float:
    """Incident probability for one row of base features."""
    values = np.asarray(row, dtype=float)
    if values.ndim != 1 or values.shape[0] != model.base_feature_count:
        raise DimensionMismatch(
            f"expected {model.base_feature_count} features, got {values.shape}")
    design = _expand(values.reshape(1, -1), model.with_interactions)[0]
    z = float(design @ np.asarray(model.coefficients))
    return _sigmoid(z)


def model_loss_fn(model: LogisticModel, features,
                  labels) -> Callable[[np.ndarray], tuple[float, np.ndarray]]:
    """Loss-and-gradient closure over the model's design expansion."""
    x = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=float)
    design = _expand(x, model.with_interactions)

    def fn(weights: np.ndarray) -> tuple[float, np.ndarray]:
        return _loss_and_grad(design, y, model.l2_penalty, np.asarray(weights, dtype=float))

    return fn


def gradient_check(loss_and_grad: Callable[[np.ndarray], tuple[float, np.ndarray]],
                   point, epsilon: float = 1e-6) -> float:
    """Max coordinate-wise deviation of the analytic gradient from central
    finite differences; absolute where both are effectively zero."""
    point = np.asarray(point, dtype=float)
    if epsilon <= 0:
        raise DomainError("epsilon must be positive")
    _, grad = loss_and_grad(point)
    worst = 0.0
    for i in range(point.shape[0]):
        bumped = point.copy()
        bumped[i] += epsilon
        plus, _ = loss_and_grad(bumped)
        bumped[i] -= 2.0 * epsilon
        minus, _ = loss_and_grad(bumped)
        fd = (plus - minus) / (2.0 * epsilon)
        denom = max(abs(float(grad[i])), abs(fd))
        diff = abs(float(grad[i]) - fd)
        worst = max(worst, diff if denom < 1e-8 else diff / denom)
    return worst


# ---------------------------------------------------------------------------
# difference in differences
# ---------------------------------------------------------------------------

class Group(str, Enum):
    TREATED = "treated"
    CONTROL = "control"


class Period(str, Enum):
    PRE = "pre"
    POST = "post"


@dataclass(frozen=True)
class PanelRow:
    unit_id: str
    group: Group
    period: Period
    outcome: float


@dataclass(frozen=True)
class DiDPanel:
    rows: tuple[PanelRow, ...]

    @classmethod
    def from_rows(cls, rows: Sequence[PanelRow]) -> "DiDPanel":
        seen: set[tuple[str, Period]] = set()
        for row in rows:
            key = (row.unit_id, row.period)
            if key in seen:
                raise DomainError(
                    f"unit {row.unit_id!r} has more than one {row.period.value} row")
            seen.add(key)
        return cls(tuple(rows))


class DiDResult(NamedTuple):
    effect: float
    group_period_means: Mapping[tuple[Group, Period], float]


def did_estimate(panel: DiDPanel) -> DiDResult:
    """Difference-in-differences effect from the 2x2 cell means."""
    cells: dict[tuple[Group, Period], list[float]] = {
        (g, p): [] for g in Group for p in Period}
    for row in panel.rows:
        cells[(row.group, row.period)].append(row.outcome)
    means = {}
    for key, values in cells.items():
        if not values:
            raise EmptyCell(f"no observations for {key[0].value}/{key[1].value}")
        means[key] = sum(values) / len(values)
    treated_delta = means[(Group.TREATED, Period.POST)] - means[(Group.TREATED, Period.PRE)]
    control_delta = means[(Group.CONTROL, Period.POST)] - means[(Group.CONTROL, Period.PRE)]
    return DiDResult(treated_delta - control_delta, means)


# ---------------------------------------------------------------------------
# ranking quality
# ---------------------------------------------------------------------------

def auc(scores, labels) -> float:
    """Mann-Whitney AUC with ties counted half."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise DimensionMismatch("scores and labels must be 1-d and equal length")
    positives = int(np.sum(y == 1))
    negatives = int(np.sum(y == 0))
    if positives + negatives != s.shape[0]:
        raise DomainError("labels must be 0/1")
    if positives == 0 or negatives == 0:
        raise DegenerateLabels("both classes required for AUC")
    order = np.argsort(s, kind="mergesort")
    ranks = np.empty(s.shape[0], dtype=float)
    i = 0
    while i < s.shape[0]:
        j = i
        while j + 1 < s.shape[0] and s[order[j + 1]] == s[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0  # average 1-based rank
        i = j + 1
    rank_sum = float(np.sum(ranks[np.asarray(y) == 1]))
    u = rank_sum - positives * (positives + 1) / 2.0
    return u / (positives * negatives)


# ---------------------------------------------------------------------------
# the study itself
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StudyReport:
    seed: int
    counts: Mapping[str, int]
    with_interactions: bool
    l2_penalty: float
    n_train: int
    n_holdout: int
    incident_rate: float
    coefficients: Mapping[str, float]
    converged: bool
    iterations: int
    final_loss: float
    max_gradient_deviation: float
    auc_model_train: float
    auc_model_holdout: float
    auc_composite_holdout: float
    auc_composite_full: float
    fitted_signal_weights: Mapping[str, float]


def signal_feature_matrix(reports) -> np.ndarray:
    """Per-actor signal values with NO_DATA imputed at the neutral midpoint."""
    rows = []
    for report in reports:
        rows.append([s.value if s.value is not None else NEUTRAL_FEATURE
                     for s in report.signals])
    return np.asarray(rows, dtype=float)


def fitted_weight_overlay(model: LogisticModel) -> dict[str, float]:
    """Signal weights from coefficient magnitudes in the protective direction.

    A more negative coefficient means the signal pushes harder against
    incidents, so it earns more weight; weights are floored and rescaled
    to mean 1 so the composite keeps its scale.
    """
    raw = {}
    for signal_id in SIGNAL_IDS:
        position = model.feature_names.index(signal_id)
        raw[signal_id] = max(MIN_OVERLAY_WEIGHT, -model.coefficients[position])
    scale = len(raw) / sum(raw.values())
    return {sid: value * scale for sid, value in raw.items()}


def run_effectiveness_study(population: LabeledPopulation, cfg: EngineConfig,
                            with_interactions: bool = False,
                            l2: float = 0.01,
                            holdout_fraction: float = 0.2) -> StudyReport:
    """Score the population, fit signals -> incidents, report ranking power."""
    benchmark, reports = score_population(list(population.snapshots), cfg)
    features = signal_feature_matrix(reports)
    labels = np.asarray(
        [1 if population.incidents[r.actor_id] else 0 for r in reports], dtype=float)
    finals = np.asarray(
        [r.final_reputation if r.final_reputation is not None else 0.0 for r in reports])
    risk = 1.0 - finals

    n = len(reports)
    indices = list(range(n))
    random.Random(population.seed + 101).shuffle(indices)
    n_holdout = max(1, round(n * holdout_fraction))
    holdout = np.asarray(indices[:n_holdout])
    train = np.asarray(indices[n_holdout:])
    for part, name in ((train, "train"), (holdout, "holdout")):
        if len(np.unique(labels[part])) < 2:
            raise DegenerateLabels(f"{name} split has a single class")

    model = fit_logistic(features[train], labels[train], l2=l2,
                         with_interactions=with_interactions,
                         feature_names=SIGNAL_IDS)
    deviation = gradient_check(
        model_loss_fn(model, features[train], labels[train]),
        np.asarray(model.coefficients), epsilon=1e-5)

    predictions_train = np.asarray(
        [predict_logistic(model, features[i]) for i in train])
    predictions_holdout = np.asarray(
        [predict_logistic(model, features[i]) for i in holdout])

    coefficients = {name: coef for name, coef
                    in zip(model.feature_names, model.coefficients)}
    counts: dict[str, int] = {}
    for archetype in population.labels.values():
        counts[archetype] = counts.get(archetype, 0) + 1

    return StudyReport(
        seed=population.seed,
        counts=counts,
        with_interactions=with_interactions,
        l2_penalty=l2,
        n_train=int(len(train)),
        n_holdout=int(len(holdout)),
        incident_rate=float(labels.mean()),
        coefficients=coefficients,
        converged=model.converged,
        iterations=model.iterations,
        final_loss=model.final_loss,
        max_gradient_deviation=deviation,
        auc_model_train=auc(predictions_train, labels[train]),
        auc_model_holdout=auc(predictions_holdout, labels[holdout]),
        auc_composite_holdout=auc(risk[holdout], labels[holdout]),
        auc_composite_full=auc(risk, labels),
        fitted_signal_weights=fitted_weight_overlay(model),
    )


def study_to_dict(report: StudyReport) -> dict:
    return {
        "study_schema_version": 1,
        "seed": report.seed,
        "counts": dict(sorted(report.counts.items())),
        "with_interactions": report.with_interactions,
        "l2_penalty": report.l2_penalty,
        "n_train": report.n_train,
        "n_holdout": report.n_holdout,
        "incident_rate": report.incident_rate,
        "coefficients": {k: float(v) for k, v in report.coefficients.items()},
        "converged": report.converged,
        "iterations": report.iterations,
        "final_loss": report.final_loss,
        "max_gradient_deviation": report.max_gradient_deviation,
        "auc_model_train": report.auc_model_train,
        "auc_model_holdout": report.auc_model_holdout,
        "auc_composite_holdout": report.auc_composite_holdout,
        "auc_composite_full": report.auc_composite_full,
        "fitted_signal_weights": {k: float(v)
                                  for k, v in sorted(report.fitted_signal_weights.items())},
    }


def overlay_to_dict(report: StudyReport) -> dict:
    """Config overlay: drop this on top of defaults to use fitted weights."""
    return {
        "overlay_schema_version": 1,
        "signal_weights": {k: float(v)
                           for k, v in sorted(report.fitted_signal_weights.items())},
        "source": {
            "seed": report.seed,
            "auc_composite_holdout": report.auc_composite_holdout,
            "auc_model_holdout": report.auc_model_holdout,
        },
    }
