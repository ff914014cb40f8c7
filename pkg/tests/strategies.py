"""Hypothesis strategies producing valid in-memory snapshots.

Everything is drawn from bounded integers so shrinking stays fast and the
generated objects always satisfy validate_snapshot (asserted by its own
test). Timestamps anchor on a fixed evaluation instant.
"""

from __future__ import annotations

from datetime import datetime, timedelta, timezone

from hypothesis import strategies as st

from arms.domain import (
    SCHEMA_VERSION,
    ActorProfile,
    ActorSnapshot,
    BranchRecord,
    ContributionEvent,
    DependencyRecord,
    EventKind,
    ExternalProjectRef,
    ProjectRecord,
    Purpose,
    SecurityFeatureState,
    Severity,
    Visibility,
    VulnSource,
    VulnerabilityRecord,
)

AS_OF = datetime(2024, 1, 1, tzinfo=timezone.utc)
ACTOR = "actor-under-test"

_SEVERITIES = tuple(Severity)
_KINDS = tuple(EventKind)
_PURPOSES = tuple(Purpose)


@st.composite
def security_features(draw) -> SecurityFeatureState:
    return SecurityFeatureState(
        dependency_alerts_enabled=draw(st.booleans()),
        dependency_alerts_open=draw(st.integers(0, 5)),
        dependency_alerts_resolved=draw(st.integers(0, 5)),
        secret_scanning_enabled=draw(st.booleans()),
        code_scanning_enabled=draw(st.booleans()),
        code_scan_alerts_open=draw(st.integers(0, 5)),
        code_scan_alerts_resolved=draw(st.integers(0, 5)),
        push_protection_enabled=draw(st.booleans()),
        integrity_guarantee=draw(st.booleans()),
        private_vuln_reporting_or_policy=draw(st.booleans()),
    )


@st.composite
def branches(draw) -> tuple[BranchRecord, ...]:
    count = draw(st.integers(1, 3))
    return tuple(
        BranchRecord(
            name=f"branch-{i}",
            is_default=(i == 0),
            is_protected=draw(st.booleans()),
        )
        for i in range(count)
    )


@st.composite
def snapshots(
    draw,
    max_projects: int = 3,
    max_events: int = 10,
    max_vulns: int = 6,
    allow_private: bool = True,
) -> ActorSnapshot:
    account_age_days = draw(st.integers(30, 3000))
    account_created = AS_OF - timedelta(days=account_age_days)
    profile = ActorProfile(
        actor_id=ACTOR,
        login=ACTOR,
        account_created_at=account_created,
        evaluated_as_of=AS_OF,
    )

    n_projects = draw(st.integers(0, max_projects))
    projects = []
    dep_slots: list[tuple[int, int]] = []  # (project index, dependency index)
    for i in range(n_projects):
        created = account_created + timedelta(
            days=draw(st.integers(0, max(0, account_age_days - 1)))
        )
        n_deps = draw(st.integers(0, 3))
        deps = tuple(
            DependencyRecord(name=f"dep-{i}-{j}", version="1.0", known_vulns=())
            for j in range(n_deps)
        )
        dep_slots.extend((i, j) for j in range(n_deps))
        visibility = (
            draw(st.sampled_from((Visibility.PUBLIC, Visibility.PRIVATE)))
            if allow_private
            else Visibility.PUBLIC
        )
        projects.append(
            ProjectRecord(
                project_id=f"{ACTOR}/project-{i}",
                owner_id=ACTOR,
                visibility=visibility,
                created_at=created,
                stars=draw(st.integers(0, 500)),
                forks=draw(st.integers(0, 100)),
                downloads=draw(st.integers(0, 20000)),
                branches=draw(branches()),
                security_features=draw(security_features()),
                workflow_count=draw(st.integers(0, 4)),
                dependencies=deps,
            )
        )

    n_refs = draw(st.integers(0, 2))
    refs = tuple(
        ExternalProjectRef(project_id=f"upstream-{i}/lib-{i}", owner_id=f"upstream-{i}")
        for i in range(n_refs)
    )

    event_targets = [p.project_id for p in projects] + [r.project_id for r in refs]
    events = []
    if event_targets:
        n_events = draw(st.integers(0, max_events))
        created_by_id = {p.project_id: p.created_at for p in projects}
        for i in range(n_events):
            target = draw(st.sampled_from(event_targets))
            floor = created_by_id.get(target, account_created)
            span = max(0, int((AS_OF - floor).total_seconds() // 3600) - 1)
            occurred = floor + timedelta(hours=draw(st.integers(0, span)))
            events.append(
                ContributionEvent(
                    event_id=f"event-{i}",
                    actor_id=ACTOR,
                    project_id=target,
                    kind=draw(st.sampled_from(_KINDS)),
                    occurred_at=occurred,
                    lines_changed=draw(st.integers(0, 900)),
                    purpose=draw(st.sampled_from(_PURPOSES)),
                    is_first_contribution_to_project=False,
                )
            )

    vuln_targets = [p for p in projects] + list(refs)
    vulns = []
    new_deps: dict[tuple[int, int], list[str]] = {}
    if vuln_targets:
        n_vulns = draw(st.integers(0, max_vulns))
        for i in range(n_vulns):
            vuln_id = f"vuln-{i}"
            can_be_dep = bool(dep_slots)
            source = draw(
                st.sampled_from(
                    (VulnSource.DIRECT, VulnSource.AVAILABILITY_INCIDENT, VulnSource.DEPENDENCY)
                    if can_be_dep
                    else (VulnSource.DIRECT, VulnSource.AVAILABILITY_INCIDENT)
                )
            )
            if source == VulnSource.DEPENDENCY:
                slot = draw(st.sampled_from(dep_slots))
                project = projects[slot[0]]
                target_id = project.project_id
                new_deps.setdefault(slot, []).append(vuln_id)
            else:
                target = draw(st.sampled_from(vuln_targets))
                target_id = target.project_id
            reported = AS_OF - timedelta(days=draw(st.integers(0, 400)))
            if draw(st.booleans()):
                fix_days = draw(st.integers(0, 400))
                fixed = min(AS_OF, reported + timedelta(days=fix_days))
            else:
                fixed = None
            introduced_by = None
            if target_id not in {p.project_id for p in projects} and draw(st.booleans()):
                introduced_by = ACTOR
            vulns.append(
                VulnerabilityRecord(
                    vuln_id=vuln_id,
                    project_id=target_id,
                    severity=draw(st.sampled_from(_SEVERITIES)),
                    source=source,
                    reported_at=reported,
                    fixed_at=fixed,
                    introduced_by=introduced_by,
                )
            )

    if new_deps:
        rebuilt = []
        for i, project in enumerate(projects):
            deps = tuple(
                DependencyRecord(
                    name=dep.name,
                    version=dep.version,
                    known_vulns=tuple(sorted(new_deps.get((i, j), []))),
                )
                for j, dep in enumerate(project.dependencies)
            )
            rebuilt.append(
                ProjectRecord(
                    project_id=project.project_id,
                    owner_id=project.owner_id,
                    visibility=project.visibility,
                    created_at=project.created_at,
                    stars=project.stars,
                    forks=project.forks,
                    downloads=project.downloads,
                    branches=project.branches,
                    security_features=project.security_features,
                    workflow_count=project.workflow_count,
                    dependencies=deps,
                )
            )
        projects = rebuilt

    return ActorSnapshot(
        schema_version=SCHEMA_VERSION,
        profile=profile,
        owned_projects=tuple(projects),
        contributions=tuple(events),
        external_project_refs=refs,
        vulnerabilities=tuple(vulns),
    )
