"""File-backed artifact store.

One root directory with a fixed layout: snapshots/, benchmarks/,
reports/, overlays/ for engine artifacts plus cache/ for the raw forge
payloads. Writes are atomic (temp file then rename) and every artifact
gets a sha256 sidecar checked on read, so a truncated or tampered file
fails loudly instead of scoring garbage.
"""
from __future__ import annotations

import json
import os
import re
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping

from .domain import Violation, snapshot_from_dict, validate_snapshot
from .errors import (
    ExistsWithoutForce,
    IoError,
    NotFound,
    ParseError,
    ValidationFailed,
)
from .jsonio import canonical_bytes, sha256_hex
from .reputation import benchmark_from_dict

KINDS = ("snapshots", "benchmarks", "reports", "overlays")
_ID_PATTERN = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")


def _validate_snapshot_doc(payload: Mapping) -> None:
    snapshot = snapshot_from_dict(payload)
    violations = validate_snapshot(snapshot)
    if violations:
        raise ValidationFailed(violations)


def _validate_benchmark_doc(payload: Mapping) -> None:
    benchmark_from_dict(payload)


def _require_keys(payload: Mapping, keys: tuple[str, ...], kind: str) -> None:
    missing = [k for k in keys if k not in payload]
    if missing:
        raise ValidationFailed(
            [Violation("MISSING_FIELD", f"{kind} document lacks {k!r}") for k in missing])


def _validate_report_doc(payload: Mapping) -> None:
    # The reports kind holds two shapes: per-actor reputation reports and
    # population study reports from the evaluation harness.
    if "study_schema_version" in payload:
        _require_keys(payload, ("seed", "coefficients", "auc_model_holdout"), "study")
        return
    _require_keys(payload, ("report_schema_version", "actor_id", "signals", "weightage",
                            "final_reputation", "advisory", "config_fingerprint"),
                  "report")


def _validate_overlay_doc(payload: Mapping) -> None:
    _require_keys(payload, ("signal_weights",), "overlay")
    weights = payload["signal_weights"]
    if not isinstance(weights, Mapping) or not weights:
        raise ValidationFailed(
            [Violation("BAD_OVERLAY", "signal_weights must be a non-empty object")])


_VALIDATORS: Mapping[str, Callable[[Mapping], None]] = {
    "snapshots": _validate_snapshot_doc,
    "benchmarks": _validate_benchmark_doc,
    "reports": _validate_report_doc,
    "overlays": _validate_overlay_doc,
}


@dataclass(frozen=True)
class StoreLayout:
    root: Path

    def kind_dir(self, kind: str) -> Path:
        if kind not in KINDS:
            raise IoError(f"unknown artifact kind {kind!r}")
        return self.root / kind

    @property
    def cache_dir(self) -> Path:
        return self.root / "cache"


class Store:
    """Artifact persistence rooted at one directory."""

    def __init__(self, root, create: bool = True):
        self.layout = StoreLayout(Path(root))
        if create:
            self._ensure_layout()

    def _ensure_layout(self) -> None:
        try:
            self.layout.root.mkdir(parents=True, exist_ok=True)
            for kind in KINDS:
                self.layout.kind_dir(kind).mkdir(exist_ok=True)
            self.layout.cache_dir.mkdir(exist_ok=True)
            # reports can carry actor histories; keep them owner-only
            os.chmod(self.layout.kind_dir("reports"), 0o700)
        except OSError as exc:
            raise IoError(f"cannot initialize store at {self.layout.root}: {exc}") from None

    def path_for(self, kind: str, artifact_id: str) -> Path:
        if not _ID_PATTERN.match(artifact_id):
            raise IoError(f"bad artifact id {artifact_id!r}")
        return self.layout.kind_dir(kind) / f"{artifact_id}.json"

    def exists(self, kind: str, artifact_id: str) -> bool:
        return self.path_for(kind, artifact_id).exists()

    def list_ids(self, kind: str) -> list[str]:
        directory = self.layout.kind_dir(kind)
        if not directory.exists():
            return []
        return sorted(p.stem for p in directory.glob("*.json"))

    def put(self, kind: str, artifact_id: str, payload: Mapping,
            force: bool = False) -> Path:
        """Atomically write an artifact and its integrity sidecar."""
        target = self.path_for(kind, artifact_id)
        if target.exists() and not force:
            raise ExistsWithoutForce(f"{kind}/{artifact_id} already exists; pass force")
        data = canonical_bytes(payload)
        digest = sha256_hex(data)
        try:
            atomic_write_bytes(target, data)
            atomic_write_bytes(target.with_suffix(".json.sha256"),
                          (digest + "\n").encode("ascii"))
        except OSError as exc:
            raise IoError(f"cannot write {kind}/{artifact_id}: {exc}") from None
        return target

    def get(self, kind: str, artifact_id: str) -> dict:
        """Read, integrity-check, and schema-validate an artifact."""
        target = self.path_for(kind, artifact_id)
        if not target.exists():
            raise NotFound(f"{kind}/{artifact_id} not in store")
        try:
            data = target.read_bytes()
        except OSError as exc:
            raise IoError(f"cannot read {kind}/{artifact_id}: {exc}") from None

        sidecar = target.with_suffix(".json.sha256")
        if sidecar.exists():
            try:
                expected = sidecar.read_text("ascii").strip()
            except OSError as exc:
                raise IoError(f"cannot read sidecar of {kind}/{artifact_id}: {exc}") from None
            if sha256_hex(data) != expected:
                raise ValidationFailed([Violation(
                    "INTEGRITY_MISMATCH",
                    f"{kind}/{artifact_id} content does not match its sha256 sidecar")])

        try:
            payload = json.loads(data.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ParseError(f"{kind}/{artifact_id} is not valid JSON: {exc}") from None
        if not isinstance(payload, dict):
            raise ParseError(f"{kind}/{artifact_id} must be a JSON object")
        validator = _VALIDATORS.get(kind)
        if validator is not None:
            validator(payload)
        return payload


def atomic_write_bytes(target: Path, data: bytes) -> None:
    handle, temp_name = tempfile.mkstemp(dir=str(target.parent),
                                         prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(handle, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(temp_name, target)
    except OSError:
        try:
            os.unlink(temp_name)
        except OSError:
            pass
        raise
