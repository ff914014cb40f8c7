"""Security signals S1 through S7.

Every signal lands in [0, 1] where 1 is the best observable posture, or
None when the snapshot simply has no evidence for it (scored as absent,
never as zero). A signal's value is the plain mean of its non-None
sub-scores, and each scorer returns the sub-scores plus per-record
evidence so a report can say where a number came from.

Signals S2 through S7 only look at "used" owned projects: public ones
with nonzero reach. A private or zero-usage project contributes nothing
anywhere, including vulnerability attribution for S1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

from .domain import (
    ActorSnapshot,
    EngineConfig,
    ProjectRecord,
    Severity,
    SIGNAL_IDS,
    Visibility,
    VulnerabilityRecord,
    VulnSource,
)
from .errors import DomainError
from .jsonio import days_between

# cap constant for sub-metric 2e: ten affected projects saturate the scale
DEP_EXPOSURE_CAP = 10.0

SUB_METRIC_IDS: Mapping[str, tuple[str, ...]] = {
    "S1": ("1a", "1b", "1c"),
    "S2": ("2a", "2b", "2c", "2d", "2e"),
    "S3": ("3a", "3b", "3c", "3d"),
    "S4": ("4a",),
    "S5": ("5a", "5b"),
    "S6": ("6a",),
    "S7": ("7a",),
}

SIGNAL_LABELS: Mapping[str, str] = {
    "S1": "vulnerability handling in own changes",
    "S2": "dependency vulnerability handling",
    "S3": "scanning and alerting posture",
    "S4": "artifact integrity guarantees",
    "S5": "branch protection coverage",
    "S6": "vulnerability reporting channel",
    "S7": "automated workflow adoption",
}


@dataclass(frozen=True)
class SignalScore:
    signal_id: str
    value: Optional[float]
    sub_scores: Mapping[str, Optional[float]]
    evidence: tuple[tuple[str, float], ...] = ()


def decay_score(elapsed_days: float, deadline_days: float) -> float:
    """exp(-elapsed/deadline): 1.0 at instant fix, ~0.37 at the deadline."""
    if elapsed_days < 0:
        raise DomainError(f"elapsed_days must be >= 0, got {elapsed_days}")
    if deadline_days <= 0:
        raise DomainError(f"deadline_days must be > 0, got {deadline_days}")
    return math.exp(-elapsed_days / deadline_days)


def severity_adherence(severities: Iterable[Severity],
                       weights: Mapping[Severity, float]) -> Optional[float]:
    """1 minus the mean severity weight; None for an empty multiset."""
    values = [weights[s] for s in severities]
    if not values:
        return None
    return 1.0 - sum(values) / len(values)


def usage_weight(project: ProjectRecord) -> float:
    """Reach of a project; private or zero-reach projects weigh nothing."""
    if project.visibility == Visibility.PRIVATE:
        return 0.0
    if project.stars == 0 and project.forks == 0 and project.downloads == 0:
        return 0.0
    return math.log(1.0 + project.stars + 2.0 * project.forks + project.downloads / 100.0)


def used_projects(snapshot: ActorSnapshot) -> list[tuple[ProjectRecord, float]]:
    """Owned projects that carry usage weight, with their weights."""
    out = []
    for project in snapshot.owned_projects:
        weight = usage_weight(project)
        if weight > 0.0:
            out.append((project, weight))
    return out


def _mean(values: list[float]) -> Optional[float]:
    if not values:
        return None
    return sum(values) / len(values)


def _weighted_mean(pairs: list[tuple[float, float]]) -> Optional[float]:
    # pairs of (weight, value); weights here are always > 0
    total = sum(w for w, _ in pairs)
    if total == 0.0:
        return None
    return sum(w * v for w, v in pairs) / total


def _signal_value(sub_scores: Mapping[str, Optional[float]]) -> Optional[float]:
    return _mean([v for v in sub_scores.values() if v is not None])


def _vuln_elapsed_days(vuln: VulnerabilityRecord, snapshot: ActorSnapshot) -> float:
    end = vuln.fixed_at if vuln.fixed_at is not None else snapshot.profile.evaluated_as_of
    return max(0.0, days_between(vuln.reported_at, end))


def attributed_vulnerabilities(snapshot: ActorSnapshot) -> list[VulnerabilityRecord]:
    """Non-dependency vulns counted against this actor.

    Attribution follows ownership of a used project, or introduced_by for
    projects the actor does not own. Vulns confined to private or
    zero-usage projects never count, mirroring the usage exclusion.
    """
    used_ids = {p.project_id for p, _ in used_projects(snapshot)}
    owned_ids = snapshot.owned_project_ids()
    actor_id = snapshot.profile.actor_id
    out = []
    for vuln in snapshot.vulnerabilities:
        if vuln.source == VulnSource.DEPENDENCY:
            continue
        if vuln.project_id in owned_ids:
            if vuln.project_id in used_ids:
                out.append(vuln)
        elif vuln.introduced_by == actor_id:
            out.append(vuln)
    return out


def score_s1(snapshot: ActorSnapshot, cfg: EngineConfig) -> SignalScore:
    """Handling of vulnerabilities introduced through the actor's own work."""
    vulns = attributed_vulnerabilities(snapshot)
    contribution_count = len(snapshot.contributions)
    evidence: list[tuple[str, float]] = []

    decays = []
    for vuln in vulns:
        elapsed = _vuln_elapsed_days(vuln, snapshot)
        value = decay_score(elapsed, cfg.deadline_for(vuln.severity))
        decays.append(value)
        evidence.append((vuln.vuln_id, value))
    sub_1a = _mean(decays)

    if vulns:
        sub_1b = severity_adherence((v.severity for v in vulns), cfg.severity_weights)
    elif contribution_count > 0:
        # a contributing actor with a clean record earns full credit here
        sub_1b = 1.0
    else:
        sub_1b = None

    if contribution_count > 0:
        direct_count = sum(1 for v in vulns if v.source == VulnSource.DIRECT)
        ratio = cfg.direct_vuln_amplifier * direct_count / contribution_count
        sub_1c = 1.0 - min(1.0, ratio)
    else:
        sub_1c = None

    sub_scores = {"1a": sub_1a, "1b": sub_1b, "1c": sub_1c}
    return SignalScore("S1", _signal_value(sub_scores), sub_scores, tuple(evidence))


def _project_dep_vulns(project: ProjectRecord,
                       by_id: Mapping[str, VulnerabilityRecord]) -> list[VulnerabilityRecord]:
    seen: list[VulnerabilityRecord] = []
    for dep in project.dependencies:
        for vuln_id in dep.known_vulns:
            vuln = by_id.get(vuln_id)
            if vuln is not None and vuln.source == VulnSource.DEPENDENCY:
                seen.append(vuln)
    return seen


def score_s2(snapshot: ActorSnapshot, cfg: EngineConfig) -> SignalScore:
    """Handling of vulnerable dependencies across used projects."""
    projects = used_projects(snapshot)
    if not projects:
        sub_scores = {sid: None for sid in SUB_METRIC_IDS["S2"]}
        return SignalScore("S2", None, sub_scores, ())

    by_id = {v.vuln_id: v for v in snapshot.vulnerabilities}
    evidence: list[tuple[str, float]] = []

    decay_pairs: list[tuple[float, float]] = []
    all_dep_vulns: list[VulnerabilityRecord] = []
    flag_pairs: list[tuple[float, float]] = []
    ratio_pairs: list[tuple[float, float]] = []
    affected = 0

    for project, weight in projects:
        dep_vulns = _project_dep_vulns(project, by_id)
        all_dep_vulns.extend(dep_vulns)
        if dep_vulns:
            per_vuln = [
                decay_score(_vuln_elapsed_days(v, snapshot), cfg.deadline_for(v.severity))
                for v in dep_vulns
            ]
            project_decay = sum(per_vuln) / len(per_vuln)
            decay_pairs.append((weight, project_decay))
            affected += 1
            evidence.append((project.project_id, project_decay))
        flag_pairs.append((weight, 1.0 if dep_vulns else 0.0))
        total_deps = len(project.dependencies)
        if total_deps > 0:
            vulnerable = sum(1 for d in project.dependencies if d.known_vulns)
            ratio_pairs.append((weight, min(1.0, vulnerable / total_deps)))

    sub_2a = _weighted_mean(decay_pairs) if decay_pairs else None
    sub_2b = severity_adherence((v.severity for v in all_dep_vulns), cfg.severity_weights)
    flagged = _weighted_mean(flag_pairs)
    sub_2c = None if flagged is None else 1.0 - flagged
    ratio = _weighted_mean(ratio_pairs) if ratio_pairs else None
    sub_2d = None if ratio is None else 1.0 - ratio
    sub_2e = 1.0 - min(1.0, affected / DEP_EXPOSURE_CAP)

    sub_scores = {"2a": sub_2a, "2b": sub_2b, "2c": sub_2c, "2d": sub_2d, "2e": sub_2e}
    return SignalScore("S2", _signal_value(sub_scores), sub_scores, tuple(evidence))


def _alert_feature_score(enabled: bool, open_count: int, resolved_count: int) -> float:
    if not enabled:
        return 0.0
    total = open_count + resolved_count
    resolution = 1.0 if total == 0 else resolved_count / total
    return 0.5 + 0.5 * resolution


def score_s3(snapshot: ActorSnapshot, cfg: EngineConfig) -> SignalScore:
    """Scanning and alerting posture over used projects."""
    projects = used_projects(snapshot)
    if not projects:
        sub_scores = {sid: None for sid in SUB_METRIC_IDS["S3"]}
        return SignalScore("S3", None, sub_scores, ())

    pairs: dict[str, list[tuple[float, float]]] = {"3a": [], "3b": [], "3c": [], "3d": []}
    evidence: list[tuple[str, float]] = []
    for project, weight in projects:
        feats = project.security_features
        per_project = {
            "3a": _alert_feature_score(feats.dependency_alerts_enabled,
                                       feats.dependency_alerts_open,
                                       feats.dependency_alerts_resolved),
            "3b": 1.0 if feats.secret_scanning_enabled else 0.0,
            "3c": _alert_feature_score(feats.code_scanning_enabled,
                                       feats.code_scan_alerts_open,
                                       feats.code_scan_alerts_resolved),
            "3d": 1.0 if feats.push_protection_enabled else 0.0,
        }
        for sid, value in per_project.items():
            pairs[sid].append((weight, value))
        evidence.append((project.project_id, sum(per_project.values()) / 4.0))

    sub_scores = {sid: _weighted_mean(pairs[sid]) for sid in SUB_METRIC_IDS["S3"]}
    return SignalScore("S3", _signal_value(sub_scores), sub_scores, tuple(evidence))


def _weighted_fraction(snapshot: ActorSnapshot, signal_id: str, sub_id: str,
                       predicate) -> SignalScore:
    projects = used_projects(snapshot)
    if not projects:
        return SignalScore(signal_id, None, {sub_id: None}, ())
    pairs = [(weight, 1.0 if predicate(project) else 0.0) for project, weight in projects]
    value = _weighted_mean(pairs)
    evidence = tuple((project.project_id, 1.0 if predicate(project) else 0.0)
                     for project, _ in projects)
    return SignalScore(signal_id, value, {sub_id: value}, evidence)


def score_s4(snapshot: ActorSnapshot, cfg: EngineConfig) -> SignalScore:
    """Usage-weighted share of projects with an integrity guarantee."""
    return _weighted_fraction(snapshot, "S4", "4a",
                              lambda p: p.security_features.integrity_guarantee)


def score_s5(snapshot: ActorSnapshot, cfg: EngineConfig) -> SignalScore:
    """Branch protection: coverage ratio and any-protection, averaged."""
    projects = used_projects(snapshot)
    if not projects:
        return SignalScore("S5", None, {"5a": None, "5b": None}, ())

    ratio_pairs: list[tuple[float, float]] = []
    any_pairs: list[tuple[float, float]] = []
    evidence: list[tuple[str, float]] = []
    for project, weight in projects:
        protected = sum(1 for b in project.branches if b.is_protected)
        total = len(project.branches)
        if total > 0:
            ratio_pairs.append((weight, protected / total))
            evidence.append((project.project_id, protected / total))
        any_pairs.append((weight, 1.0 if protected > 0 else 0.0))

    sub_scores = {
        "5a": _weighted_mean(ratio_pairs) if ratio_pairs else None,
        "5b": _weighted_mean(any_pairs),
    }
    return SignalScore("S5", _signal_value(sub_scores), sub_scores, tuple(evidence))


def score_s6(snapshot: ActorSnapshot, cfg: EngineConfig) -> SignalScore:
    """Usage-weighted share of projects with a reporting channel or policy."""
    return _weighted_fraction(snapshot, "S6", "6a",
                              lambda p: p.security_features.private_vuln_reporting_or_policy)


def score_s7(snapshot: ActorSnapshot, cfg: EngineConfig) -> SignalScore:
    """Usage-weighted share of projects running at least one workflow."""
    return _weighted_fraction(snapshot, "S7", "7a", lambda p: p.workflow_count >= 1)


_SCORERS = {
    "S1": score_s1,
    "S2": score_s2,
    "S3": score_s3,
    "S4": score_s4,
    "S5": score_s5,
    "S6": score_s6,
    "S7": score_s7,
}


def score_all_signals(snapshot: ActorSnapshot, cfg: EngineConfig) -> tuple[SignalScore, ...]:
    """All seven signals in order."""
    return tuple(_SCORERS[signal_id](snapshot, cfg) for signal_id in SIGNAL_IDS)
