"""Exception types shared across the engine.

Everything raised on purpose derives from ArmsError so callers can catch
one base class at the CLI boundary and map it to an exit code.
"""
from __future__ import annotations


class ArmsError(Exception):
    """Base class for all engine errors."""


class DomainError(ArmsError):
    """A numeric argument is outside its defined domain."""


class ConfigError(ArmsError):
    """An engine configuration violates its invariants."""


class ConfigMismatch(ArmsError):
    """The active config fingerprint does not match the benchmark's."""


class ParseError(ArmsError):
    """A document could not be decoded into the expected shape."""


class UnsupportedSchemaVersion(ArmsError):
    """The document declares a schema version this build does not read."""


class ValidationFailed(ArmsError):
    """A snapshot or stored artifact failed invariant validation."""

    def __init__(self, violations):
        self.violations = tuple(violations)
        lines = "; ".join(f"{v.code}: {v.message}" for v in self.violations)
        super().__init__(f"{len(self.violations)} violation(s): {lines}")


class IoError(ArmsError):
    """An artifact could not be read or written."""


class NotFound(ArmsError):
    """No artifact stored under the requested kind and id."""


class ExistsWithoutForce(ArmsError):
    """Refusing to overwrite an existing artifact without force."""


class ActorNotFound(ArmsError):
    """The forge has no actor with the requested login."""


class AuthRequired(ArmsError):
    """The forge refused the request for lack of credentials."""


class RateLimited(ArmsError):
    """Request budget exhausted, locally or upstream."""

    def __init__(self, message: str, retry_after_seconds: float = 0.0):
        super().__init__(message)
        self.retry_after_seconds = retry_after_seconds


class SchemaDrift(ArmsError):
    """An upstream payload is missing fields this adapter requires."""


class InconsistentPopulation(ArmsError):
    """Snapshot collection contradicts itself (ids or ownership)."""


class UnknownActor(ArmsError):
    """The actor is not a node of the contribution graph."""


class EmptyPopulation(ArmsError):
    """No actor in the population produced a usable composite."""


class DegenerateLabels(ArmsError):
    """A label vector with a single class cannot be fit or ranked."""


class DimensionMismatch(ArmsError):
    """Feature row shape does not match what the model was fit on."""


class EmptyCell(ArmsError):
    """A group/period cell of the panel has no observations."""
