"""Normalized interaction-history model and engine configuration.

An ActorSnapshot is the single input every scoring stage reads: one
actor's profile, owned projects with their security posture, the
contribution events we can see, references to external projects they
touched, and the vulnerability records attributed to them. Snapshots
are immutable value objects; anything that varies by policy lives in
EngineConfig instead of in code.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, fields
from datetime import datetime
from enum import Enum
from typing import Mapping, Optional, Sequence

from .errors import ConfigError, ParseError, UnsupportedSchemaVersion
from .jsonio import canonical_bytes, format_utc, parse_utc, sha256_hex

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SIGNAL_IDS = ("S1", "S2", "S3", "S4", "S5", "S6", "S7")


class Visibility(str, Enum):
    PUBLIC = "public"
    PRIVATE = "private"


class EventKind(str, Enum):
    COMMIT = "commit"
    CHANGE_REQUEST = "change_request"
    REVIEW = "review"
    ISSUE = "issue"


class Purpose(str, Enum):
    FEATURE = "feature"
    FIX = "fix"
    DOCS = "docs"
    OTHER = "other"


class Severity(str, Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"
    CRITICAL = "critical"


SEVERITY_ORDER = (Severity.LOW, Severity.MEDIUM, Severity.HIGH, Severity.CRITICAL)


class VulnSource(str, Enum):
    DIRECT = "direct"
    DEPENDENCY = "dependency"
    AVAILABILITY_INCIDENT = "availability_incident"


@dataclass(frozen=True)
class ActorProfile:
    actor_id: str
    login: str
    account_created_at: datetime
    evaluated_as_of: datetime


@dataclass(frozen=True)
class BranchRecord:
    name: str
    is_default: bool
    is_protected: bool


@dataclass(frozen=True)
class SecurityFeatureState:
    dependency_alerts_enabled: bool
    dependency_alerts_open: int
    dependency_alerts_resolved: int
    secret_scanning_enabled: bool
    code_scanning_enabled: bool
    code_scan_alerts_open: int
    code_scan_alerts_resolved: int
    push_protection_enabled: bool
    integrity_guarantee: bool
    private_vuln_reporting_or_policy: bool


@dataclass(frozen=True)
class DependencyRecord:
    name: str
    version: str
    # ids referencing ActorSnapshot.vulnerabilities entries with source=dependency
    known_vulns: tuple[str, ...] = ()


@dataclass(frozen=True)
class ProjectRecord:
    project_id: str
    owner_id: str
    visibility: Visibility
    created_at: datetime
    stars: int
    forks: int
    downloads: int
    branches: tuple[BranchRecord, ...]
    security_features: SecurityFeatureState
    workflow_count: int
    dependencies: tuple[DependencyRecord, ...] = ()


@dataclass(frozen=True)
class ContributionEvent:
    event_id: str
    actor_id: str
    project_id: str
    kind: EventKind
    occurred_at: datetime
    lines_changed: int
    purpose: Purpose
    is_first_contribution_to_project: bool


@dataclass(frozen=True)
class VulnerabilityRecord:
    vuln_id: str
    project_id: str
    severity: Severity
    source: VulnSource
    reported_at: datetime
    fixed_at: Optional[datetime] = None
    introduced_by: Optional[str] = None
    introducing_event: Optional[str] = None


@dataclass(frozen=True)
class ExternalProjectRef:
    project_id: str
    owner_id: str


@dataclass(frozen=True)
class ActorSnapshot:
    schema_version: int
    profile: ActorProfile
    owned_projects: tuple[ProjectRecord, ...]
    contributions: tuple[ContributionEvent, ...]
    external_project_refs: tuple[ExternalProjectRef, ...]
    vulnerabilities: tuple[VulnerabilityRecord, ...]

    def owned_project_ids(self) -> frozenset[str]:
        return frozenset(p.project_id for p in self.owned_projects)

    def project(self, project_id: str) -> Optional[ProjectRecord]:
        for record in self.owned_projects:
            if record.project_id == project_id:
                return record
        return None


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


# ---------------------------------------------------------------------------
# engine configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AdvisoryThresholds:
    high_risk_percentile: float = 0.10
    review_percentile: float = 0.25
    high_risk_flag_count: int = 2
    review_flag_count: int = 1


@dataclass(frozen=True)
class EngineConfig:
    severity_weights: Mapping[Severity, float]
    fix_deadline_days: Mapping[Severity, float]
    dep_fix_deadline_days: float
    signal_weights: Mapping[str, float]
    impact_lambdas: tuple[float, float, float]
    impact_floor: float
    tenure_full_days: float
    edge_maturity_days: float
    strength_halfpoint: float
    direct_vuln_amplifier: float
    advisory: AdvisoryThresholds
    rng_seed: int

    def __post_init__(self):
        _check_config(self)

    def deadline_for(self, severity: Severity) -> float:
        """Decay deadline in days for a severity, with the scalar fallback."""
        return self.fix_deadline_days.get(severity, self.dep_fix_deadline_days)


def _check_config(cfg: EngineConfig) -> None:
    previous = None
    for severity in SEVERITY_ORDER:
        if severity not in cfg.severity_weights:
            raise ConfigError(f"severity_weights missing {severity.value}")
        weight = cfg.severity_weights[severity]
        if not 0.0 <= weight <= 1.0:
            raise ConfigError(f"severity weight {severity.value}={weight} outside [0, 1]")
        if previous is not None and weight <= previous:
            raise ConfigError("severity weights must strictly increase with severity")
        previous = weight
    for severity, days in cfg.fix_deadline_days.items():
        if days <= 0:
            raise ConfigError(f"fix deadline for {severity.value} must be positive")
    if cfg.dep_fix_deadline_days <= 0:
        raise ConfigError("dep_fix_deadline_days must be positive")
    unknown = set(cfg.signal_weights) - set(SIGNAL_IDS)
    if unknown:
        raise ConfigError(f"signal_weights has unknown ids: {sorted(unknown)}")
    for signal_id in SIGNAL_IDS:
        if signal_id not in cfg.signal_weights:
            raise ConfigError(f"signal_weights missing {signal_id}")
        if cfg.signal_weights[signal_id] < 0:
            raise ConfigError(f"signal weight {signal_id} must be >= 0")
    lams = cfg.impact_lambdas
    if len(lams) != 3 or any(lam < 0 for lam in lams):
        raise ConfigError("impact_lambdas must be three non-negative values")
    if abs(sum(lams) - 1.0) > 1e-9:
        raise ConfigError(f"impact_lambdas must sum to 1, got {sum(lams)}")
    if not 0.0 <= cfg.impact_floor <= 1.0:
        raise ConfigError("impact_floor must lie in [0, 1]")
    for name in ("tenure_full_days", "edge_maturity_days", "strength_halfpoint"):
        if getattr(cfg, name) <= 0:
            raise ConfigError(f"{name} must be positive")
    if cfg.direct_vuln_amplifier <= 0:
        raise ConfigError("direct_vuln_amplifier must be positive")
    adv = cfg.advisory
    for name in ("high_risk_percentile", "review_percentile"):
        value = getattr(adv, name)
        if not 0.0 <= value <= 1.0:
            raise ConfigError(f"advisory {name} must lie in [0, 1]")
    if adv.high_risk_flag_count < 1 or adv.review_flag_count < 1:
        raise ConfigError("advisory flag counts must be >= 1")


def default_config(rng_seed: int = 42) -> EngineConfig:
    """The canonical defaults every CLI command starts from."""
    return EngineConfig(
        severity_weights={
            Severity.LOW: 0.25,
            Severity.MEDIUM: 0.5,
            Severity.HIGH: 0.75,
            Severity.CRITICAL: 1.0,
        },
        fix_deadline_days={
            Severity.CRITICAL: 7.0,
            Severity.HIGH: 14.0,
            Severity.MEDIUM: 30.0,
            Severity.LOW: 90.0,
        },
        dep_fix_deadline_days=30.0,
        signal_weights={signal_id: 1.0 for signal_id in SIGNAL_IDS},
        impact_lambdas=(0.2, 0.4, 0.4),
        impact_floor=0.2,
        tenure_full_days=365.0,
        edge_maturity_days=180.0,
        strength_halfpoint=20.0,
        direct_vuln_amplifier=10.0,
        advisory=AdvisoryThresholds(),
        rng_seed=rng_seed,
    )


def config_to_dict(cfg: EngineConfig) -> dict:
    return {
        "severity_weights": {s.value: cfg.severity_weights[s] for s in SEVERITY_ORDER},
        "fix_deadline_days": {s.value: float(d) for s, d in cfg.fix_deadline_days.items()},
        "dep_fix_deadline_days": float(cfg.dep_fix_deadline_days),
        "signal_weights": {k: float(v) for k, v in sorted(cfg.signal_weights.items())},
        "impact_lambdas": [float(v) for v in cfg.impact_lambdas],
        "impact_floor": float(cfg.impact_floor),
        "tenure_full_days": float(cfg.tenure_full_days),
        "edge_maturity_days": float(cfg.edge_maturity_days),
        "strength_halfpoint": float(cfg.strength_halfpoint),
        "direct_vuln_amplifier": float(cfg.direct_vuln_amplifier),
        "advisory": {
            "high_risk_percentile": cfg.advisory.high_risk_percentile,
            "review_percentile": cfg.advisory.review_percentile,
            "high_risk_flag_count": cfg.advisory.high_risk_flag_count,
            "review_flag_count": cfg.advisory.review_flag_count,
        },
        "rng_seed": int(cfg.rng_seed),
    }


def config_from_dict(payload: Mapping) -> EngineConfig:
    base = config_to_dict(default_config())
    merged = merge_config(base, dict(payload))
    try:
        severity_weights = {Severity(k): float(v) for k, v in merged["severity_weights"].items()}
        deadlines = {Severity(k): float(v) for k, v in merged["fix_deadline_days"].items()}
        adv = merged["advisory"]
        return EngineConfig(
            severity_weights=severity_weights,
            fix_deadline_days=deadlines,
            dep_fix_deadline_days=float(merged["dep_fix_deadline_days"]),
            signal_weights={k: float(v) for k, v in merged["signal_weights"].items()},
            impact_lambdas=tuple(float(v) for v in merged["impact_lambdas"]),
            impact_floor=float(merged["impact_floor"]),
            tenure_full_days=float(merged["tenure_full_days"]),
            edge_maturity_days=float(merged["edge_maturity_days"]),
            strength_halfpoint=float(merged["strength_halfpoint"]),
            direct_vuln_amplifier=float(merged["direct_vuln_amplifier"]),
            advisory=AdvisoryThresholds(
                high_risk_percentile=float(adv["high_risk_percentile"]),
                review_percentile=float(adv["review_percentile"]),
                high_risk_flag_count=int(adv["high_risk_flag_count"]),
                review_flag_count=int(adv["review_flag_count"]),
            ),
            rng_seed=int(merged["rng_seed"]),
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad config document: {exc}") from None


def merge_config(base: dict, overlay: Mapping) -> dict:
    """Overlay wins; dict-valued sections merge key by key."""
    merged = dict(base)
    for key, value in overlay.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), dict):
            section = dict(merged[key])
            section.update(value)
            merged[key] = section
        else:
            merged[key] = value
    return merged


def config_fingerprint(cfg: EngineConfig) -> str:
    """Stable digest identifying a config; stamped on every artifact."""
    return sha256_hex(canonical_bytes(config_to_dict(cfg)))


# ---------------------------------------------------------------------------
# snapshot validation
# ---------------------------------------------------------------------------

def validate_snapshot(snapshot: ActorSnapshot) -> list[Violation]:
    """Return every invariant violation; empty list means valid."""
    out: list[Violation] = []

    def bad(code: str, message: str) -> None:
        out.append(Violation(code, message))

    if snapshot.schema_version != SCHEMA_VERSION:
        bad("SCHEMA_VERSION_MISMATCH",
            f"snapshot declares version {snapshot.schema_version}, engine reads {SCHEMA_VERSION}")

    profile = snapshot.profile
    if not profile.actor_id:
        bad("EMPTY_ACTOR_ID", "profile.actor_id must be non-empty")
    if not profile.login:
        bad("EMPTY_LOGIN", "profile.login must be non-empty")
    for label, moment in (("account_created_at", profile.account_created_at),
                          ("evaluated_as_of", profile.evaluated_as_of)):
        if moment.tzinfo is None:
            bad("TIMESTAMP_NOT_UTC", f"profile.{label} is naive")
    if (profile.account_created_at.tzinfo and profile.evaluated_as_of.tzinfo
            and profile.account_created_at > profile.evaluated_as_of):
        bad("ACCOUNT_CREATED_AFTER_EVALUATION",
            "account_created_at is later than evaluated_as_of")

    as_of = profile.evaluated_as_of
    owned_ids: set[str] = set()
    for project in snapshot.owned_projects:
        pid = project.project_id
        if pid in owned_ids:
            bad("DUPLICATE_PROJECT_ID", f"owned project {pid!r} listed twice")
        owned_ids.add(pid)
        if project.owner_id != profile.actor_id:
            bad("OWNED_PROJECT_OWNER_MISMATCH",
                f"project {pid!r} owner {project.owner_id!r} is not {profile.actor_id!r}")
        for count_name in ("stars", "forks", "downloads", "workflow_count"):
            if getattr(project, count_name) < 0:
                bad("NEGATIVE_COUNT", f"project {pid!r} {count_name} is negative")
        feats = project.security_features
        for count_name in ("dependency_alerts_open", "dependency_alerts_resolved",
                           "code_scan_alerts_open", "code_scan_alerts_resolved"):
            if getattr(feats, count_name) < 0:
                bad("NEGATIVE_COUNT", f"project {pid!r} {count_name} is negative")
        names = [b.name for b in project.branches]
        if len(names) != len(set(names)):
            bad("DUPLICATE_BRANCH_NAME", f"project {pid!r} repeats a branch name")
        defaults = sum(1 for b in project.branches if b.is_default)
        if defaults != 1:
            bad("DEFAULT_BRANCH_COUNT",
                f"project {pid!r} has {defaults} default branches, expected exactly 1")
        dep_names = [(d.name, d.version) for d in project.dependencies]
        if len(dep_names) != len(set(dep_names)):
            bad("DUPLICATE_DEPENDENCY", f"project {pid!r} repeats a dependency")
        for dep in project.dependencies:
            if not dep.name:
                bad("EMPTY_DEPENDENCY_NAME", f"project {pid!r} has an unnamed dependency")

    external_ids: set[str] = set()
    for ref in snapshot.external_project_refs:
        if ref.project_id in external_ids:
            bad("DUPLICATE_PROJECT_ID", f"external ref {ref.project_id!r} listed twice")
        external_ids.add(ref.project_id)
        if ref.project_id in owned_ids:
            bad("EXTERNAL_REF_OVERLAPS_OWNED",
                f"project {ref.project_id!r} is both owned and an external ref")

    known_projects = owned_ids | external_ids
    owned_by_id = {p.project_id: p for p in snapshot.owned_projects}

    event_ids: set[str] = set()
    for event in snapshot.contributions:
        if event.event_id in event_ids:
            bad("DUPLICATE_EVENT_ID", f"event {event.event_id!r} listed twice")
        event_ids.add(event.event_id)
        if event.actor_id != profile.actor_id:
            bad("EVENT_ACTOR_MISMATCH",
                f"event {event.event_id!r} belongs to {event.actor_id!r}")
        if event.project_id not in known_projects:
            bad("UNRESOLVED_PROJECT_REF",
                f"event {event.event_id!r} references unknown project {event.project_id!r}")
        if event.lines_changed < 0:
            bad("NEGATIVE_COUNT", f"event {event.event_id!r} lines_changed is negative")
        if event.occurred_at.tzinfo is None:
            bad("TIMESTAMP_NOT_UTC", f"event {event.event_id!r} occurred_at is naive")
            continue
        if event.occurred_at > as_of:
            bad("EVENT_AFTER_EVALUATION",
                f"event {event.event_id!r} occurred after evaluated_as_of")
        project = owned_by_id.get(event.project_id)
        if project is not None and event.occurred_at < project.created_at:
            bad("EVENT_BEFORE_PROJECT_CREATED",
                f"event {event.event_id!r} predates project {event.project_id!r}")

    vuln_ids: set[str] = set()
    dep_vulns: set[str] = set()
    for vuln in snapshot.vulnerabilities:
        if vuln.vuln_id in vuln_ids:
            bad("DUPLICATE_VULN_ID", f"vulnerability {vuln.vuln_id!r} listed twice")
        vuln_ids.add(vuln.vuln_id)
        if vuln.source == VulnSource.DEPENDENCY:
            dep_vulns.add(vuln.vuln_id)
        if vuln.project_id not in known_projects:
            bad("UNRESOLVED_PROJECT_REF",
                f"vulnerability {vuln.vuln_id!r} references unknown project {vuln.project_id!r}")
        if vuln.introducing_event is not None and vuln.introducing_event not in event_ids:
            bad("UNRESOLVED_EVENT_REF",
                f"vulnerability {vuln.vuln_id!r} references unknown event "
                f"{vuln.introducing_event!r}")
        if vuln.reported_at.tzinfo is None:
            bad("TIMESTAMP_NOT_UTC", f"vulnerability {vuln.vuln_id!r} reported_at is naive")
            continue
        if vuln.reported_at > as_of:
            bad("VULN_REPORTED_AFTER_EVALUATION",
                f"vulnerability {vuln.vuln_id!r} reported after evaluated_as_of")
        if vuln.fixed_at is not None:
            if vuln.fixed_at.tzinfo is None:
                bad("TIMESTAMP_NOT_UTC", f"vulnerability {vuln.vuln_id!r} fixed_at is naive")
            elif vuln.fixed_at < vuln.reported_at:
                bad("FIX_BEFORE_REPORT",
                    f"vulnerability {vuln.vuln_id!r} fixed before it was reported")

    for project in snapshot.owned_projects:
        for dep in project.dependencies:
            for vuln_id in dep.known_vulns:
                if vuln_id not in vuln_ids:
                    bad("UNRESOLVED_VULN_REF",
                        f"dependency {dep.name!r} of {project.project_id!r} references "
                        f"unknown vulnerability {vuln_id!r}")
                    continue
                if vuln_id not in dep_vulns:
                    bad("DEP_VULN_SOURCE_MISMATCH",
                        f"dependency {dep.name!r} of {project.project_id!r} references "
                        f"{vuln_id!r} whose source is not dependency")

    return out


# ---------------------------------------------------------------------------
# snapshot serialization
# ---------------------------------------------------------------------------

_PROFILE_KEYS = {"actor_id", "login", "account_created_at", "evaluated_as_of"}
_BRANCH_KEYS = {"name", "is_default", "is_protected"}
_FEATURE_KEYS = {f.name for f in fields(SecurityFeatureState)}
_DEPENDENCY_KEYS = {"name", "version", "known_vulns"}
_PROJECT_KEYS = {"project_id", "owner_id", "visibility", "created_at", "stars", "forks",
                 "downloads", "branches", "security_features", "workflow_count",
                 "dependencies"}
_EVENT_KEYS = {"event_id", "actor_id", "project_id", "kind", "occurred_at",
               "lines_changed", "purpose", "is_first_contribution_to_project"}
_VULN_KEYS = {"vuln_id", "project_id", "severity", "source", "reported_at", "fixed_at",
              "introduced_by", "introducing_event"}
_REF_KEYS = {"project_id", "owner_id"}
_SNAPSHOT_KEYS = {"schema_version", "profile", "owned_projects", "contributions",
                  "external_project_refs", "vulnerabilities"}


def _guard_keys(payload: Mapping, allowed: set[str], where: str, strict: bool) -> None:
    unknown = set(payload) - allowed
    if not unknown:
        return
    message = f"unknown fields in {where}: {sorted(unknown)}"
    if strict:
        raise ParseError(message)
    logger.warning("%s (ignored)", message)


def _string(payload: Mapping, key: str, where: str) -> str:
    value = payload.get(key)
    if not isinstance(value, str):
        raise ParseError(f"{where}.{key} must be a string")
    return value


def _integer(payload: Mapping, key: str, where: str) -> int:
    value = payload.get(key)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError(f"{where}.{key} must be an integer")
    return value


def _boolean(payload: Mapping, key: str, where: str) -> bool:
    value = payload.get(key)
    if not isinstance(value, bool):
        raise ParseError(f"{where}.{key} must be a boolean")
    return value


def _enum(cls, payload: Mapping, key: str, where: str):
    value = payload.get(key)
    try:
        return cls(value)
    except ValueError:
        allowed = sorted(m.value for m in cls)
        raise ParseError(f"{where}.{key}={value!r} not in {allowed}") from None


def snapshot_to_dict(snapshot: ActorSnapshot) -> dict:
    """Canonical dict form: stable array orders, UTC Z timestamps."""
    profile = snapshot.profile
    return {
        "schema_version": snapshot.schema_version,
        "profile": {
            "actor_id": profile.actor_id,
            "login": profile.login,
            "account_created_at": format_utc(profile.account_created_at),
            "evaluated_as_of": format_utc(profile.evaluated_as_of),
        },
        "owned_projects": [
            _project_to_dict(p)
            for p in sorted(snapshot.owned_projects, key=lambda p: p.project_id)
        ],
        "contributions": [
            _event_to_dict(e)
            for e in sorted(snapshot.contributions,
                            key=lambda e: (e.occurred_at, e.event_id))
        ],
        "external_project_refs": [
            {"project_id": r.project_id, "owner_id": r.owner_id}
            for r in sorted(snapshot.external_project_refs, key=lambda r: r.project_id)
        ],
        "vulnerabilities": [
            _vuln_to_dict(v)
            for v in sorted(snapshot.vulnerabilities, key=lambda v: v.vuln_id)
        ],
    }


def _project_to_dict(project: ProjectRecord) -> dict:
    feats = project.security_features
    return {
        "project_id": project.project_id,
        "owner_id": project.owner_id,
        "visibility": project.visibility.value,
        "created_at": format_utc(project.created_at),
        "stars": project.stars,
        "forks": project.forks,
        "downloads": project.downloads,
        "branches": [
            {"name": b.name, "is_default": b.is_default, "is_protected": b.is_protected}
            for b in sorted(project.branches, key=lambda b: b.name)
        ],
        "security_features": {name: getattr(feats, name) for name in sorted(_FEATURE_KEYS)},
        "workflow_count": project.workflow_count,
        "dependencies": [
            {"name": d.name, "version": d.version, "known_vulns": sorted(d.known_vulns)}
            for d in sorted(project.dependencies, key=lambda d: (d.name, d.version))
        ],
    }


def _event_to_dict(event: ContributionEvent) -> dict:
    return {
        "event_id": event.event_id,
        "actor_id": event.actor_id,
        "project_id": event.project_id,
        "kind": event.kind.value,
        "occurred_at": format_utc(event.occurred_at),
        "lines_changed": event.lines_changed,
        "purpose": event.purpose.value,
        "is_first_contribution_to_project": event.is_first_contribution_to_project,
    }


def _vuln_to_dict(vuln: VulnerabilityRecord) -> dict:
    return {
        "vuln_id": vuln.vuln_id,
        "project_id": vuln.project_id,
        "severity": vuln.severity.value,
        "source": vuln.source.value,
        "reported_at": format_utc(vuln.reported_at),
        "fixed_at": None if vuln.fixed_at is None else format_utc(vuln.fixed_at),
        "introduced_by": vuln.introduced_by,
        "introducing_event": vuln.introducing_event,
    }


def snapshot_from_dict(payload: Mapping, *, strict: bool = False) -> ActorSnapshot:
    """Decode a snapshot document; strict mode rejects unknown fields."""
    if not isinstance(payload, Mapping):
        raise ParseError("snapshot document must be an object")
    _guard_keys(payload, _SNAPSHOT_KEYS, "snapshot", strict)
    version = payload.get("schema_version")
    if isinstance(version, bool) or not isinstance(version, int):
        raise ParseError("snapshot.schema_version must be an integer")
    if version != SCHEMA_VERSION:
        raise UnsupportedSchemaVersion(
            f"snapshot schema version {version} not supported (engine reads {SCHEMA_VERSION})")

    raw_profile = payload.get("profile")
    if not isinstance(raw_profile, Mapping):
        raise ParseError("snapshot.profile must be an object")
    _guard_keys(raw_profile, _PROFILE_KEYS, "profile", strict)
    profile = ActorProfile(
        actor_id=_string(raw_profile, "actor_id", "profile"),
        login=_string(raw_profile, "login", "profile"),
        account_created_at=parse_utc(_string(raw_profile, "account_created_at", "profile")),
        evaluated_as_of=parse_utc(_string(raw_profile, "evaluated_as_of", "profile")),
    )

    def sequence(key: str) -> Sequence:
        value = payload.get(key, [])
        if not isinstance(value, Sequence) or isinstance(value, (str, bytes)):
            raise ParseError(f"snapshot.{key} must be an array")
        return value

    projects = tuple(_project_from_dict(p, strict) for p in sequence("owned_projects"))
    events = tuple(_event_from_dict(e, strict) for e in sequence("contributions"))
    refs = []
    for raw in sequence("external_project_refs"):
        if not isinstance(raw, Mapping):
            raise ParseError("external_project_refs entries must be objects")
        _guard_keys(raw, _REF_KEYS, "external_project_ref", strict)
        refs.append(ExternalProjectRef(
            project_id=_string(raw, "project_id", "external_project_ref"),
            owner_id=_string(raw, "owner_id", "external_project_ref"),
        ))
    vulns = tuple(_vuln_from_dict(v, strict) for v in sequence("vulnerabilities"))

    return ActorSnapshot(
        schema_version=version,
        profile=profile,
        owned_projects=projects,
        contributions=events,
        external_project_refs=tuple(refs),
        vulnerabilities=vulns,
    )


def _project_from_dict(raw: Mapping, strict: bool) -> ProjectRecord:
    if not isinstance(raw, Mapping):
        raise ParseError("owned_projects entries must be objects")
    _guard_keys(raw, _PROJECT_KEYS, "project", strict)
    where = f"project {raw.get('project_id')!r}"

    raw_branches = raw.get("branches", [])
    if not isinstance(raw_branches, Sequence) or isinstance(raw_branches, (str, bytes)):
        raise ParseError(f"{where}.branches must be an array")
    branches = []
    for rb in raw_branches:
        if not isinstance(rb, Mapping):
            raise ParseError(f"{where}.branches entries must be objects")
        _guard_keys(rb, _BRANCH_KEYS, f"{where} branch", strict)
        branches.append(BranchRecord(
            name=_string(rb, "name", "branch"),
            is_default=_boolean(rb, "is_default", "branch"),
            is_protected=_boolean(rb, "is_protected", "branch"),
        ))

    raw_feats = raw.get("security_features")
    if not isinstance(raw_feats, Mapping):
        raise ParseError(f"{where}.security_features must be an object")
    _guard_keys(raw_feats, _FEATURE_KEYS, f"{where} security_features", strict)
    feats = SecurityFeatureState(
        dependency_alerts_enabled=_boolean(raw_feats, "dependency_alerts_enabled", where),
        dependency_alerts_open=_integer(raw_feats, "dependency_alerts_open", where),
        dependency_alerts_resolved=_integer(raw_feats, "dependency_alerts_resolved", where),
        secret_scanning_enabled=_boolean(raw_feats, "secret_scanning_enabled", where),
        code_scanning_enabled=_boolean(raw_feats, "code_scanning_enabled", where),
        code_scan_alerts_open=_integer(raw_feats, "code_scan_alerts_open", where),
        code_scan_alerts_resolved=_integer(raw_feats, "code_scan_alerts_resolved", where),
        push_protection_enabled=_boolean(raw_feats, "push_protection_enabled", where),
        integrity_guarantee=_boolean(raw_feats, "integrity_guarantee", where),
        private_vuln_reporting_or_policy=_boolean(
            raw_feats, "private_vuln_reporting_or_policy", where),
    )

    raw_deps = raw.get("dependencies", [])
    if not isinstance(raw_deps, Sequence) or isinstance(raw_deps, (str, bytes)):
        raise ParseError(f"{where}.dependencies must be an array")
    dependencies = []
    for rd in raw_deps:
        if not isinstance(rd, Mapping):
            raise ParseError(f"{where}.dependencies entries must be objects")
        _guard_keys(rd, _DEPENDENCY_KEYS, f"{where} dependency", strict)
        vuln_ids = rd.get("known_vulns", [])
        if not isinstance(vuln_ids, Sequence) or isinstance(vuln_ids, (str, bytes)):
            raise ParseError(f"{where} dependency known_vulns must be an array")
        dependencies.append(DependencyRecord(
            name=_string(rd, "name", "dependency"),
            version=_string(rd, "version", "dependency"),
            known_vulns=tuple(str(v) for v in vuln_ids),
        ))

    return ProjectRecord(
        project_id=_string(raw, "project_id", "project"),
        owner_id=_string(raw, "owner_id", where),
        visibility=_enum(Visibility, raw, "visibility", where),
        created_at=parse_utc(_string(raw, "created_at", where)),
        stars=_integer(raw, "stars", where),
        forks=_integer(raw, "forks", where),
        downloads=_integer(raw, "downloads", where),
        branches=tuple(branches),
        security_features=feats,
        workflow_count=_integer(raw, "workflow_count", where),
        dependencies=tuple(dependencies),
    )


def _event_from_dict(raw: Mapping, strict: bool) -> ContributionEvent:
    if not isinstance(raw, Mapping):
        raise ParseError("contributions entries must be objects")
    _guard_keys(raw, _EVENT_KEYS, "event", strict)
    where = f"event {raw.get('event_id')!r}"
    return ContributionEvent(
        event_id=_string(raw, "event_id", "event"),
        actor_id=_string(raw, "actor_id", where),
        project_id=_string(raw, "project_id", where),
        kind=_enum(EventKind, raw, "kind", where),
        occurred_at=parse_utc(_string(raw, "occurred_at", where)),
        lines_changed=_integer(raw, "lines_changed", where),
        purpose=_enum(Purpose, raw, "purpose", where),
        is_first_contribution_to_project=_boolean(
            raw, "is_first_contribution_to_project", where),
    )


def _vuln_from_dict(raw: Mapping, strict: bool) -> VulnerabilityRecord:
    if not isinstance(raw, Mapping):
        raise ParseError("vulnerabilities entries must be objects")
    _guard_keys(raw, _VULN_KEYS, "vulnerability", strict)
    where = f"vulnerability {raw.get('vuln_id')!r}"
    fixed_at = raw.get("fixed_at")
    introduced_by = raw.get("introduced_by")
    introducing_event = raw.get("introducing_event")
    if introduced_by is not None and not isinstance(introduced_by, str):
        raise ParseError(f"{where}.introduced_by must be a string or null")
    if introducing_event is not None and not isinstance(introducing_event, str):
        raise ParseError(f"{where}.introducing_event must be a string or null")
    return VulnerabilityRecord(
        vuln_id=_string(raw, "vuln_id", "vulnerability"),
        project_id=_string(raw, "project_id", where),
        severity=_enum(Severity, raw, "severity", where),
        source=_enum(VulnSource, raw, "source", where),
        reported_at=parse_utc(_string(raw, "reported_at", where)),
        fixed_at=None if fixed_at is None else parse_utc(fixed_at),
        introduced_by=introduced_by,
        introducing_event=introducing_event,
    )
