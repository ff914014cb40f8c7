"""Worked examples and properties for the seven security signals."""

import dataclasses
import math
from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given, strategies as st

from arms.domain import (
    ActorProfile,
    ActorSnapshot,
    BranchRecord,
    ContributionEvent,
    DependencyRecord,
    EventKind,
    ProjectRecord,
    Purpose,
    SCHEMA_VERSION,
    SecurityFeatureState,
    Severity,
    Visibility,
    VulnerabilityRecord,
    VulnSource,
    default_config,
    validate_snapshot,
)
from arms.errors import DomainError
from arms.signals import (
    decay_score,
    score_all_signals,
    severity_adherence,
    usage_weight,
)

from strategies import AS_OF, snapshots

UTC = timezone.utc
CFG = default_config()


def _features(**kw) -> SecurityFeatureState:
    base = dict(dependency_alerts_enabled=True, dependency_alerts_open=0,
                dependency_alerts_resolved=0, secret_scanning_enabled=True,
                code_scanning_enabled=True, code_scan_alerts_open=0,
                code_scan_alerts_resolved=0, push_protection_enabled=True,
                integrity_guarantee=True, private_vuln_reporting_or_policy=True)
    base.update(kw)
    return SecurityFeatureState(**base)


def _project(pid="alice/app", stars=10, forks=0, downloads=0,
             visibility=Visibility.PUBLIC, branches=None, features=None,
             workflows=1, deps=()) -> ProjectRecord:
    return ProjectRecord(
        project_id=pid, owner_id=pid.split("/")[0], visibility=visibility,
        created_at=datetime(2019, 1, 1, tzinfo=UTC),
        stars=stars, forks=forks, downloads=downloads,
        branches=branches or (BranchRecord("main", True, True),),
        security_features=features or _features(),
        workflow_count=workflows,
        dependencies=tuple(deps),
    )


def _actor(projects, events=(), vulns=()) -> ActorSnapshot:
    snapshot = ActorSnapshot(
        schema_version=SCHEMA_VERSION,
        profile=ActorProfile("alice", "alice",
                             datetime(2018, 1, 1, tzinfo=UTC), AS_OF),
        owned_projects=tuple(projects),
        contributions=tuple(events),
        external_project_refs=(),
        vulnerabilities=tuple(vulns),
    )
    assert validate_snapshot(snapshot) == []
    return snapshot


def _commits(pid, n, start=datetime(2019, 2, 1, tzinfo=UTC)):
    return tuple(
        ContributionEvent(f"c{i}", "alice", pid, EventKind.COMMIT,
                          start + timedelta(days=i), 10, Purpose.OTHER, i == 0)
        for i in range(n))


def _signal(snapshot, signal_id):
    return next(s for s in score_all_signals(snapshot, CFG)
                if s.signal_id == signal_id)


# ---------------------------------------------------------------------------
# shared helpers
# ---------------------------------------------------------------------------

def test_decay_score_worked_examples():
    assert decay_score(0, 30) == 1.0
    assert decay_score(30, 30) == pytest.approx(math.exp(-1), abs=1e-12)
    assert decay_score(5, 7) == pytest.approx(math.exp(-5 / 7), abs=1e-12)


def test_decay_score_domain_errors():
    with pytest.raises(DomainError):
        decay_score(-1, 30)
    with pytest.raises(DomainError):
        decay_score(1, 0)


@given(st.floats(min_value=0, max_value=1e5), st.floats(min_value=1e-3, max_value=1e4))
def test_decay_score_bounded_and_monotone(elapsed, deadline):
    value = decay_score(elapsed, deadline)
    assert 0.0 <= value <= 1.0
    assert decay_score(elapsed + 1, deadline) <= value


def test_severity_adherence_worked_examples():
    weights = CFG.severity_weights
    assert severity_adherence((), weights) is None
    assert severity_adherence((Severity.CRITICAL,), weights) == 0.0
    assert severity_adherence((Severity.HIGH, Severity.LOW), weights) == pytest.approx(0.5)


def test_usage_weight_worked_examples():
    assert usage_weight(_project(stars=0, forks=0, downloads=0)) == 0.0
    assert usage_weight(_project(stars=500, visibility=Visibility.PRIVATE)) == 0.0
    assert usage_weight(_project(stars=0, forks=0, downloads=100)) == pytest.approx(
        math.log(2), abs=1e-12)
    assert usage_weight(_project(stars=3, forks=2, downloads=200)) == pytest.approx(
        math.log(1 + 3 + 4 + 2), abs=1e-12)


# ---------------------------------------------------------------------------
# S1: vulnerabilities in own change sets
# ---------------------------------------------------------------------------

def test_s1_clean_history_scores_one():
    snapshot = _actor([_project()], _commits("alice/app", 3))
    s1 = _signal(snapshot, "S1")
    assert s1.sub_scores["1b"] == 1.0
    assert s1.sub_scores["1c"] == 1.0
    assert s1.value == 1.0


def test_s1_zero_day_fix_scores_one_on_1a():
    reported = datetime(2022, 1, 1, tzinfo=UTC)
    vuln = VulnerabilityRecord("v1", "alice/app", Severity.CRITICAL,
                               VulnSource.DIRECT, reported, fixed_at=reported)
    snapshot = _actor([_project()], _commits("alice/app", 3), [vuln])
    assert _signal(snapshot, "S1").sub_scores["1a"] == pytest.approx(1.0)


def test_s1_amplifier_worked_example():
    # 100 contributions, 2 direct vulns, amplifier 10 -> 1c = 0.8
    events = _commits("alice/app", 100)
    vulns = [
        VulnerabilityRecord(f"v{i}", "alice/app", Severity.MEDIUM, VulnSource.DIRECT,
                            datetime(2022, 1, 1 + i, tzinfo=UTC),
                            fixed_at=datetime(2022, 2, 1, tzinfo=UTC))
        for i in range(2)
    ]
    snapshot = _actor([_project()], events, vulns)
    assert _signal(snapshot, "S1").sub_scores["1c"] == pytest.approx(0.8)


def test_s1_ignores_dependency_vulns():
    dep = DependencyRecord("dep", "1.0", ("v1",))
    vuln = VulnerabilityRecord("v1", "alice/app", Severity.CRITICAL,
                               VulnSource.DEPENDENCY,
                               datetime(2022, 1, 1, tzinfo=UTC))
    snapshot = _actor([_project(deps=[dep])], _commits("alice/app", 5), [vuln])
    s1 = _signal(snapshot, "S1")
    assert s1.sub_scores["1a"] is None
    assert s1.sub_scores["1b"] == 1.0  # clean override still applies


def test_s1_no_contributions_is_no_data():
    snapshot = _actor([], ())
    s1 = _signal(snapshot, "S1")
    assert s1.value is None
    assert all(v is None for v in s1.sub_scores.values())


# ---------------------------------------------------------------------------
# S2: vulnerable dependencies
# ---------------------------------------------------------------------------

def test_s2_no_used_projects_is_no_data():
    snapshot = _actor([_project(stars=0, visibility=Visibility.PRIVATE)])
    assert _signal(snapshot, "S2").value is None


def test_s2_clean_dependencies_score_one():
    deps = [DependencyRecord("a", "1"), DependencyRecord("b", "2")]
    snapshot = _actor([_project(deps=deps)])
    s2 = _signal(snapshot, "S2")
    assert s2.sub_scores["2c"] == 1.0
    assert s2.sub_scores["2d"] == 1.0
    assert s2.sub_scores["2e"] == 1.0


def test_s2_vulnerable_fraction_worked_example():
    # 5 deps, 2 vulnerable -> 2d = 0.6
    deps = [DependencyRecord(f"d{i}", "1", ("v1",) if i < 2 else ())
            for i in range(5)]
    vuln = VulnerabilityRecord("v1", "alice/app", Severity.MEDIUM,
                               VulnSource.DEPENDENCY,
                               datetime(2022, 1, 1, tzinfo=UTC),
                               fixed_at=datetime(2022, 1, 16, tzinfo=UTC))
    snapshot = _actor([_project(deps=deps)], vulns=[vuln])
    s2 = _signal(snapshot, "S2")
    assert s2.sub_scores["2d"] == pytest.approx(0.6)
    assert s2.sub_scores["2a"] == pytest.approx(math.exp(-0.5))  # 15d over 30d deadline
    assert s2.sub_scores["2e"] == pytest.approx(0.9)  # one affected project


def test_s2_affected_projects_cap():
    # 2e saturates at ten affected projects
    projects = []
    vulns = []
    for i in range(11):
        pid = f"alice/p{i}"
        projects.append(_project(pid=pid, deps=[DependencyRecord("d", "1", (f"v{i}",))]))
        vulns.append(VulnerabilityRecord(
            f"v{i}", pid, Severity.LOW, VulnSource.DEPENDENCY,
            datetime(2022, 1, 1, tzinfo=UTC)))
    snapshot = _actor(projects, vulns=vulns)
    assert _signal(snapshot, "S2").sub_scores["2e"] == 0.0


# ---------------------------------------------------------------------------
# S3: scanning and alert features
# ---------------------------------------------------------------------------

def test_s3_all_enabled_no_alerts_scores_one():
    snapshot = _actor([_project()])
    assert _signal(snapshot, "S3").value == 1.0


def test_s3_all_disabled_scores_zero():
    features = _features(dependency_alerts_enabled=False, secret_scanning_enabled=False,
                         code_scanning_enabled=False, push_protection_enabled=False)
    snapshot = _actor([_project(features=features)])
    assert _signal(snapshot, "S3").value == 0.0


def test_s3_resolution_ratio_worked_example():
    # 3 resolved, 1 open -> 3a = 0.5 + 0.5 * 0.75 = 0.875
    features = _features(dependency_alerts_open=1, dependency_alerts_resolved=3)
    snapshot = _actor([_project(features=features)])
    assert _signal(snapshot, "S3").sub_scores["3a"] == pytest.approx(0.875)


# ---------------------------------------------------------------------------
# S4-S7: weighted adoption fractions
# ---------------------------------------------------------------------------

def test_s4_weighted_fraction_worked_example():
    # usage weights ~1 and ~3 with only the heavy project signed -> ~0.75
    light = _project(pid="alice/light", stars=0, forks=0,
                     downloads=round(100 * (math.e - 1)),
                     features=_features(integrity_guarantee=False))
    heavy = _project(pid="alice/heavy", stars=0, forks=0,
                     downloads=round(100 * (math.e ** 3 - 1)),
                     features=_features(integrity_guarantee=True))
    snapshot = _actor([light, heavy])
    assert _signal(snapshot, "S4").value == pytest.approx(0.75, abs=1e-3)


def test_s5_branch_protection_worked_example():
    # one project, 4 branches, 1 protected -> mean(0.25, 1.0) = 0.625
    branches = (
        BranchRecord("main", True, True),
        BranchRecord("dev", False, False),
        BranchRecord("exp1", False, False),
        BranchRecord("exp2", False, False),
    )
    snapshot = _actor([_project(branches=branches)])
    s5 = _signal(snapshot, "S5")
    assert s5.sub_scores["5a"] == pytest.approx(0.25)
    assert s5.sub_scores["5b"] == 1.0
    assert s5.value == pytest.approx(0.625)


def test_s5_nothing_protected_scores_zero():
    branches = (BranchRecord("main", True, False),)
    snapshot = _actor([_project(branches=branches)])
    assert _signal(snapshot, "S5").value == 0.0


def test_s6_mixed_weights_half():
    # equal weights, one of two projects has the policy -> 0.5
    a = _project(pid="alice/a", stars=5, features=_features(
        private_vuln_reporting_or_policy=True))
    b = _project(pid="alice/b", stars=5, features=_features(
        private_vuln_reporting_or_policy=False))
    snapshot = _actor([a, b])
    assert _signal(snapshot, "S6").value == pytest.approx(0.5)


def test_s7_workflow_adoption():
    a = _project(pid="alice/a", stars=5, workflows=2)
    b = _project(pid="alice/b", stars=5, workflows=0)
    snapshot = _actor([a, b])
    assert _signal(snapshot, "S7").value == pytest.approx(0.5)


# ---------------------------------------------------------------------------
# vector-level behavior
# ---------------------------------------------------------------------------

def test_empty_snapshot_yields_all_no_data():
    snapshot = _actor([], ())
    values = [s.value for s in score_all_signals(snapshot, CFG)]
    assert values == [None] * 7


def test_signal_order_fixed():
    snapshot = _actor([_project()], _commits("alice/app", 2))
    ids = [s.signal_id for s in score_all_signals(snapshot, CFG)]
    assert ids == ["S1", "S2", "S3", "S4", "S5", "S6", "S7"]


@given(snapshots())
def test_bounds_and_no_data_propagation(snapshot):
    for score in score_all_signals(snapshot, CFG):
        subs = list(score.sub_scores.values())
        if score.value is None:
            assert all(v is None for v in subs)
        else:
            assert 0.0 <= score.value <= 1.0
            available = [v for v in subs if v is not None]
            assert available
            assert score.value == pytest.approx(
                sum(available) / len(available), abs=1e-12)
        for value in subs:
            assert value is None or 0.0 <= value <= 1.0


@given(snapshots())
def test_scoring_is_deterministic(snapshot):
    first = score_all_signals(snapshot, CFG)
    second = score_all_signals(snapshot, CFG)
    assert first == second


@given(snapshots(max_projects=2, max_events=6, max_vulns=3))
def test_s1_monotone_in_fix_time(snapshot):
    """Delaying any fix never raises S1."""
    fixed = [v for v in snapshot.vulnerabilities if v.fixed_at is not None]
    if not fixed:
        return
    target = fixed[0]
    slower = dataclasses.replace(
        target, fixed_at=min(target.fixed_at + timedelta(days=30),
                             snapshot.profile.evaluated_as_of))
    mutated = dataclasses.replace(
        snapshot,
        vulnerabilities=tuple(slower if v.vuln_id == target.vuln_id else v
                              for v in snapshot.vulnerabilities))
    before = _signal(snapshot, "S1").value
    after = _signal(mutated, "S1").value
    if before is not None and after is not None:
        assert after <= before + 1e-12


@given(snapshots(max_projects=2, max_events=6, max_vulns=2))
def test_s5_monotone_in_protection(snapshot):
    """Protecting one more branch of a used project never lowers S5."""
    used = [p for p in snapshot.owned_projects
            if usage_weight(p) > 0 and any(not b.is_protected for b in p.branches)]
    if not used:
        return
    project = used[0]
    flipped = False
    new_branches = []
    for branch in project.branches:
        if not branch.is_protected and not flipped:
            new_branches.append(dataclasses.replace(branch, is_protected=True))
            flipped = True
        else:
            new_branches.append(branch)
    mutated_project = dataclasses.replace(project, branches=tuple(new_branches))
    mutated = dataclasses.replace(
        snapshot,
        owned_projects=tuple(mutated_project if p.project_id == project.project_id else p
                             for p in snapshot.owned_projects))
    before = _signal(snapshot, "S5").value or 0.0
    after = _signal(mutated, "S5").value or 0.0
    assert after >= before - 1e-12


@given(snapshots(max_projects=2, max_events=6, max_vulns=2),
       st.integers(min_value=0, max_value=10_000))
def test_private_zero_usage_project_is_inert(snapshot, stars):
    """Mutating a zero-usage private project's stats changes no signal."""
    private = [p for p in snapshot.owned_projects
               if p.visibility == Visibility.PRIVATE]
    if not private:
        return
    project = private[0]
    mutated_project = dataclasses.replace(project, stars=stars, forks=stars,
                                          downloads=stars)
    mutated = dataclasses.replace(
        snapshot,
        owned_projects=tuple(mutated_project if p.project_id == project.project_id else p
                             for p in snapshot.owned_projects))
    assert score_all_signals(snapshot, CFG) == score_all_signals(mutated, CFG)
