"""Fetch actor histories from a forge API and normalize them into snapshots.

The fetch path is cache-first: every (endpoint, page) response lands in an
on-disk cache, and a warm cache is served without touching the network at
all.  That makes repeat runs cheap, keeps the request budget honest, and
lets an offline run replay a previously recorded session byte for byte.

Authentication tokens are held only in memory on the source descriptor and
the transport session.  They are excluded from reprs, never written to the
cache, and never copied into snapshots or fetch reports.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Optional, Protocol

from .domain import (
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
    snapshot_from_dict,
    snapshot_to_dict,
    validate_snapshot,
)
from .errors import (
    ActorNotFound,
    AuthRequired,
    ConfigError,
    IoError,
    ParseError,
    RateLimited,
    SchemaDrift,
    ValidationFailed,
)
from .jsonio import canonical_bytes, parse_utc
from .store import atomic_write_bytes

logger = logging.getLogger(__name__)

PER_PAGE = 100
# Collections are capped; anything longer is truncated and reported as such.
MAX_COLLECTION_ITEMS = 1000
REQUEST_TIMEOUT_SECONDS = 30.0

_SEVERITY_ALIASES = {
    "low": Severity.LOW,
    "medium": Severity.MEDIUM,
    "moderate": Severity.MEDIUM,
    "high": Severity.HIGH,
    "critical": Severity.CRITICAL,
}

# Release assets with these suffixes count as published integrity material.
_INTEGRITY_SUFFIXES = (".sig", ".asc", ".sigstore", ".intoto.jsonl")

_FIX_PREFIXES = ("fix", "bug", "patch", "security", "cve", "hotfix")
_DOCS_PREFIXES = ("doc", "docs", "readme", "typo")
_FEATURE_PREFIXES = ("feat", "add", "implement", "introduce", "support", "new")


@dataclass(frozen=True)
class ForgeSource:
    """Where to fetch from and under what limits."""

    base_url: str
    auth_token: Optional[str] = field(default=None, repr=False)
    requests_per_hour_budget: float = 600.0
    cache_dir: Path = Path("arms_store") / "cache"
    max_in_flight: int = 4

    def __post_init__(self) -> None:
        if not self.base_url.startswith("https://"):
            raise ConfigError("base_url must use https")
        if self.requests_per_hour_budget <= 0:
            raise ConfigError("requests_per_hour_budget must be positive")
        if self.max_in_flight < 1:
            raise ConfigError("max_in_flight must be at least 1")


@dataclass(frozen=True)
class FetchReport:
    """Accounting for a single snapshot fetch."""

    login: str
    fetched_at: datetime
    requests_made: int
    cache_hits: int
    truncated_collections: tuple[str, ...]


@dataclass(frozen=True)
class TransportResponse:
    status: int
    headers: Mapping[str, str]
    payload: object


class Transport(Protocol):
    def get(self, endpoint: str, page: Optional[int]) -> TransportResponse: ...


class HttpTransport:
    """requests-backed transport. The token lives on the session only."""

    def __init__(self, base_url: str, auth_token: Optional[str] = None) -> None:
        import requests

        self._base_url = base_url.rstrip("/")
        self._session = requests.Session()
        self._session.headers["Accept"] = "application/vnd.github+json"
        self._session.headers["User-Agent"] = "arms-engine"
        if auth_token:
            self._session.headers["Authorization"] = f"Bearer {auth_token}"

    def __repr__(self) -> str:  # never echo headers: they carry the token
        return f"HttpTransport(base_url={self._base_url!r})"

    def get(self, endpoint: str, page: Optional[int]) -> TransportResponse:
        import requests

        params = {"per_page": PER_PAGE, "page": page} if page is not None else None
        url = f"{self._base_url}/{endpoint}"
        try:
            resp = self._session.get(url, params=params, timeout=REQUEST_TIMEOUT_SECONDS)
        except requests.RequestException as exc:
            raise IoError(f"transport failure on {endpoint}: {exc}") from exc
        try:
            payload = resp.json() if resp.content else None
        except ValueError:
            payload = None
        return TransportResponse(resp.status_code, dict(resp.headers), payload)


class TokenBucket:
    """Hourly request budget with burst up to the full budget.

    Thread-safe; the clock is injectable so tests can drive time by hand.
    """

    def __init__(self, per_hour: float, clock=None) -> None:
        if per_hour <= 0:
            raise ConfigError("request budget must be positive")
        self._rate = per_hour / 3600.0
        self._capacity = float(per_hour)
        self._tokens = float(per_hour)
        self._clock = clock if clock is not None else time.monotonic
        self._updated = self._clock()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        with self._lock:
            now = self._clock()
            elapsed = max(0.0, now - self._updated)
            self._tokens = min(self._capacity, self._tokens + elapsed * self._rate)
            self._updated = now
            if self._tokens >= 1.0:
                self._tokens -= 1.0
                return
            retry_after = (1.0 - self._tokens) / self._rate
            raise RateLimited(
                "request budget exhausted", retry_after_seconds=retry_after
            )


def _sanitize_segment(value: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]", "_", value) or "_"


class ForgeClient:
    """Cache-first JSON fetcher with budget accounting.

    ``transport=None`` means offline: only the cache is consulted, and a
    miss raises IoError so the caller can tell the user exactly which
    endpoint is missing.
    """

    def __init__(
        self,
        source: ForgeSource,
        login: str,
        transport: Optional[Transport],
        clock=None,
    ) -> None:
        self._source = source
        self._transport = transport
        self._cache_root = Path(source.cache_dir) / _sanitize_segment(login)
        self._bucket = TokenBucket(source.requests_per_hour_budget, clock=clock)
        self._lock = threading.Lock()
        self.requests_made = 0
        self.cache_hits = 0

    def _cache_path(self, endpoint: str, page: Optional[int]) -> Path:
        key = f"{endpoint}?page={page if page is not None else 1}"
        digest = hashlib.sha256(key.encode("utf-8")).hexdigest()[:24]
        return self._cache_root / f"{digest}.json"

    def _cache_read(self, endpoint: str, page: Optional[int]) -> Optional[dict]:
        path = self._cache_path(endpoint, page)
        try:
            raw = path.read_bytes()
        except FileNotFoundError:
            return None
        except OSError as exc:
            raise IoError(f"cannot read cache entry {path}: {exc}") from exc
        try:
            entry = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, ValueError) as exc:
            raise ParseError(f"corrupt cache entry {path}: {exc}") from exc
        if not isinstance(entry, dict) or "status" not in entry:
            raise ParseError(f"corrupt cache entry {path}: missing status")
        return entry

    def _cache_write(
        self, endpoint: str, page: Optional[int], status: int, payload: object
    ) -> None:
        entry = {
            "endpoint": endpoint,
            "page": page if page is not None else 1,
            "status": status,
            "payload": payload,
        }
        path = self._cache_path(endpoint, page)
        path.parent.mkdir(parents=True, exist_ok=True)
        atomic_write_bytes(path, canonical_bytes(entry))

    def get_json(self, endpoint: str, page: Optional[int] = None) -> tuple[int, object]:
        cached = self._cache_read(endpoint, page)
        if cached is not None:
            with self._lock:
                self.cache_hits += 1
            return int(cached["status"]), cached.get("payload")

        if self._transport is None:
            raise IoError(
                f"offline and uncached: {endpoint}"
                f" (page {page if page is not None else 1})"
            )

        self._bucket.acquire()
        response = self._transport.get(endpoint, page)
        with self._lock:
            self.requests_made += 1
        status = response.status

        if status == 401:
            raise AuthRequired(f"{endpoint} requires credentials")
        if status == 429 or (status == 403 and _rate_limit_exhausted(response.headers)):
            raise RateLimited(
                f"upstream rate limit hit on {endpoint}",
                retry_after_seconds=_retry_after(response.headers),
            )
        if status >= 500:
            raise IoError(f"upstream error {status} on {endpoint}")

        # 403 without rate-limit headers and 404 are meaningful answers for
        # optional endpoints (feature disabled); cache them for replay.
        self._cache_write(endpoint, page, status, response.payload)
        return status, response.payload

    def paginate(self, endpoint: str) -> tuple[int, list, bool]:
        """Fetch a list endpoint page by page up to the collection cap.

        Returns (first_page_status, items, truncated).
        """
        items: list = []
        page = 1
        while True:
            status, payload = self.get_json(endpoint, page)
            if page == 1 and status != 200:
                return status, [], False
            if status != 200 or payload is None:
                return 200, items, False
            if not isinstance(payload, list):
                raise SchemaDrift(f"{endpoint} page {page}: expected a list")
            items.extend(payload)
            if len(items) >= MAX_COLLECTION_ITEMS:
                return 200, items[:MAX_COLLECTION_ITEMS], True
            if len(payload) < PER_PAGE:
                return 200, items, False
            page += 1


def _rate_limit_exhausted(headers: Mapping[str, str]) -> bool:
    lowered = {k.lower(): v for k, v in headers.items()}
    return lowered.get("x-ratelimit-remaining") == "0"


def _retry_after(headers: Mapping[str, str]) -> float:
    lowered = {k.lower(): v for k, v in headers.items()}
    if "retry-after" in lowered:
        try:
            return max(0.0, float(lowered["retry-after"]))
        except ValueError:
            return 60.0
    if "x-ratelimit-reset" in lowered:
        try:
            return max(0.0, float(lowered["x-ratelimit-reset"]) - time.time())
        except ValueError:
            return 60.0
    return 60.0


def _require_str(raw: Mapping, key: str, where: str) -> str:
    value = raw.get(key)
    if not isinstance(value, str) or not value:
        raise SchemaDrift(f"{where}: missing or non-string field {key!r}")
    return value


def _require_time(raw: Mapping, key: str, where: str) -> datetime:
    try:
        return parse_utc(_require_str(raw, key, where))
    except ParseError as exc:
        raise SchemaDrift(f"{where}: bad timestamp in {key!r}: {exc}") from exc


def _optional_time(raw: Mapping, key: str, where: str) -> Optional[datetime]:
    value = raw.get(key)
    if value is None:
        return None
    if not isinstance(value, str):
        raise SchemaDrift(f"{where}: non-string timestamp in {key!r}")
    try:
        return parse_utc(value)
    except ParseError as exc:
        raise SchemaDrift(f"{where}: bad timestamp in {key!r}: {exc}") from exc


def _int_field(raw: Mapping, key: str, default: int = 0) -> int:
    value = raw.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        return default
    return max(0, value)


def _severity_from(value: object, where: str) -> Severity:
    if not isinstance(value, str):
        raise SchemaDrift(f"{where}: missing severity")
    normalized = _SEVERITY_ALIASES.get(value.lower())
    if normalized is None:
        raise SchemaDrift(f"{where}: unknown severity {value!r}")
    return normalized


def _purpose_from_title(title: str) -> Purpose:
    lowered = title.strip().lower()
    if lowered.startswith(_FIX_PREFIXES):
        return Purpose.FIX
    if lowered.startswith(_DOCS_PREFIXES):
        return Purpose.DOCS
    if lowered.startswith(_FEATURE_PREFIXES):
        return Purpose.FEATURE
    return Purpose.OTHER


def _fetch_repo(
    client: ForgeClient,
    repo_raw: Mapping,
    as_of: datetime,
    truncated: list[str],
) -> tuple[ProjectRecord, tuple[VulnerabilityRecord, ...]]:
    full = _require_str(repo_raw, "full_name", "repo")
    owner_raw = repo_raw.get("owner")
    if not isinstance(owner_raw, Mapping):
        raise SchemaDrift(f"repo {full}: missing owner")
    owner = _require_str(owner_raw, "login", f"repo {full} owner")
    created = _require_time(repo_raw, "created_at", f"repo {full}")
    private = bool(repo_raw.get("private", False))

    _, detail = client.get_json(f"repos/{full}")
    detail_map = detail if isinstance(detail, Mapping) else {}
    security = detail_map.get("security_and_analysis")
    security_map = security if isinstance(security, Mapping) else {}

    def _analysis_enabled(feature: str) -> bool:
        state = security_map.get(feature)
        return isinstance(state, Mapping) and state.get("status") == "enabled"

    _, branch_rows, b_trunc = client.paginate(f"repos/{full}/branches")
    if b_trunc:
        truncated.append(f"repos/{full}/branches")
    default_branch = detail_map.get("default_branch") or repo_raw.get("default_branch")
    if not isinstance(default_branch, str) or not default_branch:
        default_branch = "main"
    branches: list[BranchRecord] = []
    seen_names: set[str] = set()
    for row in branch_rows:
        if not isinstance(row, Mapping):
            continue
        name = _require_str(row, "name", f"repo {full} branch")
        if name in seen_names:
            continue
        seen_names.add(name)
        branches.append(
            BranchRecord(
                name=name,
                is_default=(name == default_branch),
                is_protected=bool(row.get("protected", False)),
            )
        )
    if not any(b.is_default for b in branches):
        # Empty or truncated listing: synthesize the default branch so the
        # snapshot always has exactly one.
        branches = [b for b in branches if b.name != default_branch]
        branches.append(BranchRecord(default_branch, True, False))

    _, release_rows, r_trunc = client.paginate(f"repos/{full}/releases")
    if r_trunc:
        truncated.append(f"repos/{full}/releases")
    downloads = 0
    integrity = False
    for rel in release_rows:
        if not isinstance(rel, Mapping):
            continue
        assets = rel.get("assets")
        if not isinstance(assets, list):
            continue
        for asset in assets:
            if not isinstance(asset, Mapping):
                continue
            downloads += _int_field(asset, "download_count")
            name = asset.get("name")
            if isinstance(name, str) and name.lower().endswith(_INTEGRITY_SUFFIXES):
                integrity = True

    dep_status, dep_alert_rows, d_trunc = client.paginate(f"repos/{full}/dependabot/alerts")
    if d_trunc:
        truncated.append(f"repos/{full}/dependabot/alerts")
    dependency_alerts_enabled = dep_status == 200
    dep_open = 0
    dep_resolved = 0

    sbom_status, sbom = client.get_json(f"repos/{full}/dependency-graph/sbom")
    dep_versions: dict[str, str] = {}
    if sbom_status == 200 and isinstance(sbom, Mapping):
        sbom_doc = sbom.get("sbom")
        packages = sbom_doc.get("packages") if isinstance(sbom_doc, Mapping) else None
        if isinstance(packages, list):
            for pkg in packages:
                if not isinstance(pkg, Mapping):
                    continue
                name = pkg.get("name")
                if not isinstance(name, str) or not name:
                    continue
                version = pkg.get("versionInfo")
                dep_versions.setdefault(
                    name, version if isinstance(version, str) else "unknown"
                )

    dep_vulns: dict[str, list[str]] = {name: [] for name in dep_versions}
    vulns: list[VulnerabilityRecord] = []
    for alert in dep_alert_rows:
        if not isinstance(alert, Mapping):
            continue
        state = alert.get("state")
        if state == "open":
            dep_open += 1
        else:
            dep_resolved += 1
        advisory = alert.get("security_advisory")
        advisory_map = advisory if isinstance(advisory, Mapping) else {}
        dependency = alert.get("dependency")
        package = (
            dependency.get("package") if isinstance(dependency, Mapping) else None
        )
        pkg_name = package.get("name") if isinstance(package, Mapping) else None
        if not isinstance(pkg_name, str) or not pkg_name:
            pkg_name = "unknown"
        number = alert.get("number")
        vuln_id = f"{full}#dep-{number if isinstance(number, int) else len(vulns)}"
        reported = _require_time(alert, "created_at", f"alert {vuln_id}")
        if reported > as_of:
            continue
        fixed = _optional_time(alert, "fixed_at", f"alert {vuln_id}")
        if fixed is not None and fixed > as_of:
            fixed = None
        dep_vulns.setdefault(pkg_name, []).append(vuln_id)
        vulns.append(
            VulnerabilityRecord(
                vuln_id=vuln_id,
                project_id=full,
                severity=_severity_from(
                    advisory_map.get("severity"), f"alert {vuln_id}"
                ),
                source=VulnSource.DEPENDENCY,
                reported_at=reported,
                fixed_at=fixed,
            )
        )

    code_status, code_rows, c_trunc = client.paginate(f"repos/{full}/code-scanning/alerts")
    if c_trunc:
        truncated.append(f"repos/{full}/code-scanning/alerts")
    code_scanning_enabled = code_status == 200
    code_open = 0
    code_resolved = 0
    for alert in code_rows:
        if not isinstance(alert, Mapping):
            continue
        if alert.get("state") == "open":
            code_open += 1
        else:
            code_resolved += 1

    workflows_status, workflows = client.get_json(f"repos/{full}/actions/workflows")
    workflow_count = 0
    if workflows_status == 200 and isinstance(workflows, Mapping):
        workflow_count = _int_field(workflows, "total_count")

    pvr_status, pvr = client.get_json(f"repos/{full}/private-vulnerability-reporting")
    pvr_enabled = (
        pvr_status == 200 and isinstance(pvr, Mapping) and bool(pvr.get("enabled"))
    )

    adv_status, adv_rows, a_trunc = client.paginate(f"repos/{full}/security-advisories")
    if a_trunc:
        truncated.append(f"repos/{full}/security-advisories")
    for adv in adv_rows:
        if not isinstance(adv, Mapping):
            continue
        adv_id = adv.get("ghsa_id")
        if not isinstance(adv_id, str) or not adv_id:
            adv_id = f"{full}#adv-{len(vulns)}"
        published = _optional_time(adv, "published_at", f"advisory {adv_id}")
        if published is None or published > as_of:
            continue
        fixed = _optional_time(adv, "closed_at", f"advisory {adv_id}")
        if fixed is not None and fixed > as_of:
            fixed = None
        vulns.append(
            VulnerabilityRecord(
                vuln_id=adv_id,
                project_id=full,
                severity=_severity_from(adv.get("severity"), f"advisory {adv_id}"),
                source=VulnSource.DIRECT,
                reported_at=published,
                fixed_at=fixed,
            )
        )

    dependencies = tuple(
        DependencyRecord(
            name=name,
            version=dep_versions.get(name, "unknown"),
            known_vulns=tuple(sorted(dep_vulns.get(name, ()))),
        )
        for name in sorted(set(dep_versions) | set(dep_vulns))
    )

    project = ProjectRecord(
        project_id=full,
        owner_id=owner,
        visibility=Visibility.PRIVATE if private else Visibility.PUBLIC,
        created_at=created,
        stars=_int_field(repo_raw, "stargazers_count"),
        forks=_int_field(repo_raw, "forks_count"),
        downloads=downloads,
        branches=tuple(sorted(branches, key=lambda b: b.name)),
        security_features=SecurityFeatureState(
            dependency_alerts_enabled=dependency_alerts_enabled,
            dependency_alerts_open=dep_open,
            dependency_alerts_resolved=dep_resolved,
            secret_scanning_enabled=_analysis_enabled("secret_scanning"),
            code_scanning_enabled=code_scanning_enabled,
            code_scan_alerts_open=code_open,
            code_scan_alerts_resolved=code_resolved,
            push_protection_enabled=_analysis_enabled(
                "secret_scanning_push_protection"
            ),
            integrity_guarantee=integrity,
            private_vuln_reporting_or_policy=pvr_enabled,
        ),
        workflow_count=workflow_count,
        dependencies=dependencies,
    )
    return project, tuple(vulns)


_EVENT_KIND_BY_TYPE = {
    "PushEvent": EventKind.COMMIT,
    "PullRequestEvent": EventKind.CHANGE_REQUEST,
    "IssuesEvent": EventKind.ISSUE,
    "PullRequestReviewEvent": EventKind.REVIEW,
}


def _event_from_raw(raw: Mapping, login: str, as_of: datetime) -> Optional[dict]:
    kind = _EVENT_KIND_BY_TYPE.get(raw.get("type"))
    if kind is None:
        return None
    event_id = raw.get("id")
    if isinstance(event_id, int) and not isinstance(event_id, bool):
        event_id = str(event_id)
    if not isinstance(event_id, str) or not event_id:
        raise SchemaDrift("event: missing id")
    repo = raw.get("repo")
    repo_name = repo.get("name") if isinstance(repo, Mapping) else None
    if not isinstance(repo_name, str) or "/" not in repo_name:
        raise SchemaDrift(f"event {event_id}: missing repo name")
    occurred = _require_time(raw, "created_at", f"event {event_id}")
    if occurred > as_of:
        return None

    payload = raw.get("payload")
    payload_map = payload if isinstance(payload, Mapping) else {}
    lines = 0
    purpose = Purpose.OTHER
    if kind is EventKind.CHANGE_REQUEST:
        pr = payload_map.get("pull_request")
        pr_map = pr if isinstance(pr, Mapping) else {}
        lines = _int_field(pr_map, "additions") + _int_field(pr_map, "deletions")
        title = pr_map.get("title")
        if isinstance(title, str):
            purpose = _purpose_from_title(title)

    return {
        "event_id": event_id,
        "project_id": repo_name,
        "kind": kind,
        "occurred_at": occurred,
        "lines_changed": lines,
        "purpose": purpose,
    }


def fetch_actor_snapshot(
    source: ForgeSource,
    login: str,
    as_of: datetime,
    *,
    transport: Optional[Transport] = None,
    offline: bool = False,
    clock=None,
) -> tuple[ActorSnapshot, FetchReport]:
    """Fetch one actor's history as of a cutoff and normalize it.

    With ``offline=True`` no transport is used; a cache miss is an IoError.
    Otherwise a missing transport is built from the source descriptor.
    """
    if not login:
        raise ConfigError("login must be non-empty")
    if as_of.tzinfo is None:
        raise ConfigError("as_of must be timezone-aware UTC")
    if offline:
        transport = None
    elif transport is None:
        transport = HttpTransport(source.base_url, source.auth_token)

    client = ForgeClient(source, login, transport, clock=clock)
    truncated: list[str] = []

    status, profile_raw = client.get_json(f"users/{login}")
    if status == 404:
        raise ActorNotFound(f"no such actor: {login}")
    if status != 200 or not isinstance(profile_raw, Mapping):
        raise AuthRequired(f"cannot read profile for {login} (status {status})")
    canonical_login = _require_str(profile_raw, "login", f"user {login}")
    created_at = _require_time(profile_raw, "created_at", f"user {login}")
    profile = ActorProfile(
        actor_id=canonical_login,
        login=canonical_login,
        account_created_at=created_at,
        evaluated_as_of=as_of,
    )

    _, repo_rows, repos_truncated = client.paginate(
        f"users/{login}/repos"
    )
    if repos_truncated:
        truncated.append(f"users/{login}/repos")
    eligible: list[Mapping] = []
    skipped_projects: set[str] = set()
    for row in repo_rows:
        if not isinstance(row, Mapping):
            continue
        full = _require_str(row, "full_name", "repo")
        created = _require_time(row, "created_at", f"repo {full}")
        if created > as_of:
            skipped_projects.add(full)
            continue
        eligible.append(row)
    eligible.sort(key=lambda r: r["full_name"])

    projects: list[ProjectRecord] = []
    vulnerabilities: list[VulnerabilityRecord] = []
    if eligible:
        workers = min(source.max_in_flight, len(eligible))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(
                pool.map(
                    lambda row: _fetch_repo(client, row, as_of, truncated), eligible
                )
            )
        for project, project_vulns in results:
            projects.append(project)
            vulnerabilities.extend(project_vulns)

    _, event_rows, events_truncated = client.paginate(
        f"users/{login}/events"
    )
    if events_truncated:
        truncated.append(f"users/{login}/events")
    owned_ids = {p.project_id for p in projects}
    parsed_events: dict[str, dict] = {}
    for raw in event_rows:
        if not isinstance(raw, Mapping):
            continue
        parsed = _event_from_raw(raw, canonical_login, as_of)
        if parsed is None:
            continue
        if parsed["project_id"] in skipped_projects:
            continue
        parsed_events.setdefault(parsed["event_id"], parsed)

    external_refs: dict[str, ExternalProjectRef] = {}
    for parsed in parsed_events.values():
        pid = parsed["project_id"]
        if pid not in owned_ids and pid not in external_refs:
            external_refs[pid] = ExternalProjectRef(
                project_id=pid, owner_id=pid.split("/", 1)[0]
            )

    ordered = sorted(
        parsed_events.values(), key=lambda e: (e["occurred_at"], e["event_id"])
    )
    first_seen: set[str] = set()
    events: list[ContributionEvent] = []
    for parsed in ordered:
        pid = parsed["project_id"]
        is_first = pid not in first_seen
        first_seen.add(pid)
        events.append(
            ContributionEvent(
                event_id=parsed["event_id"],
                actor_id=canonical_login,
                project_id=pid,
                kind=parsed["kind"],
                occurred_at=parsed["occurred_at"],
                lines_changed=parsed["lines_changed"],
                purpose=parsed["purpose"],
                is_first_contribution_to_project=is_first,
            )
        )

    snapshot = ActorSnapshot(
        schema_version=SCHEMA_VERSION,
        profile=profile,
        owned_projects=tuple(sorted(projects, key=lambda p: p.project_id)),
        contributions=tuple(events),
        external_project_refs=tuple(
            sorted(external_refs.values(), key=lambda r: r.project_id)
        ),
        vulnerabilities=tuple(sorted(vulnerabilities, key=lambda v: v.vuln_id)),
    )
    violations = validate_snapshot(snapshot)
    if violations:
        raise ValidationFailed(violations)

    report = FetchReport(
        login=canonical_login,
        fetched_at=datetime.now(timezone.utc),
        requests_made=client.requests_made,
        cache_hits=client.cache_hits,
        truncated_collections=tuple(sorted(set(truncated))),
    )
    logger.info(
        "fetched %s: %d requests, %d cache hits, %d projects, %d events",
        canonical_login,
        report.requests_made,
        report.cache_hits,
        len(snapshot.owned_projects),
        len(snapshot.contributions),
    )
    return snapshot, report


def write_snapshot(snapshot: ActorSnapshot, path: Path) -> Path:
    """Serialize a valid snapshot to canonical JSON at path, atomically.

    An invalid snapshot raises ValidationFailed and leaves the file as it
    was.
    """
    violations = validate_snapshot(snapshot)
    if violations:
        raise ValidationFailed(violations)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        atomic_write_bytes(path, canonical_bytes(snapshot_to_dict(snapshot)))
    except OSError as exc:
        raise IoError(f"cannot write snapshot {path}: {exc}") from exc
    return path


def load_snapshot(path: Path, *, strict: bool = False) -> ActorSnapshot:
    """Parse and validate a snapshot file.

    Unknown keys warn, or fail when strict. Integrity violations raise
    ValidationFailed carrying the full violation list.
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except FileNotFoundError as exc:
        raise IoError(f"snapshot file not found: {path}") from exc
    except OSError as exc:
        raise IoError(f"cannot read snapshot {path}: {exc}") from exc
    try:
        payload = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, ValueError) as exc:
        raise ParseError(f"invalid JSON in {path}: {exc}") from exc
    snapshot = snapshot_from_dict(payload, strict=strict)
    violations = validate_snapshot(snapshot)
    if violations:
        raise ValidationFailed(violations)
    return snapshot
