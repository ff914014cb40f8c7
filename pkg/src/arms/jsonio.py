"""Canonical JSON and timestamp helpers.

Artifacts must serialize byte-identically across runs and platforms, so
every writer in the package goes through canonical_dumps: sorted keys,
two-space indent, trailing newline, no wall-clock anywhere near it.
"""
from __future__ import annotations

import hashlib
import json
from datetime import datetime, timezone

from .errors import ParseError

DAY_SECONDS = 86400.0


def canonical_dumps(payload) -> str:
    """Serialize a JSON-safe payload deterministically."""
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def canonical_bytes(payload) -> bytes:
    return canonical_dumps(payload).encode("utf-8")


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def parse_utc(value: str) -> datetime:
    """Parse an ISO-8601 UTC timestamp with a trailing Z."""
    if not isinstance(value, str):
        raise ParseError(f"timestamp must be a string, got {type(value).__name__}")
    text = value.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    try:
        parsed = datetime.fromisoformat(text)
    except ValueError as exc:
        raise ParseError(f"bad timestamp {value!r}: {exc}") from None
    if parsed.tzinfo is None:
        raise ParseError(f"timestamp {value!r} has no UTC offset")
    return parsed.astimezone(timezone.utc)


def format_utc(moment: datetime) -> str:
    """Render a timezone-aware datetime as ISO-8601 UTC with a Z suffix."""
    if moment.tzinfo is None:
        raise ParseError("naive datetime cannot be serialized")
    moment = moment.astimezone(timezone.utc)
    if moment.microsecond:
        return moment.isoformat().replace("+00:00", "Z")
    return moment.replace(tzinfo=None).isoformat() + "Z"


def days_between(start: datetime, end: datetime) -> float:
    """Elapsed days from start to end as a float, may be negative."""
    return (end - start).total_seconds() / DAY_SECONDS
