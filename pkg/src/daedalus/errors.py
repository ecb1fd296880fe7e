"""Exception hierarchy shared by all engine modules."""

from __future__ import annotations


class DaedalusError(Exception):
    """Base class for all engine errors."""

    code = "error"

    def __init__(self, message: str, details: list | None = None):
        super().__init__(message)
        self.message = message
        self.details = details or []

    def to_payload(self) -> dict:
        return {"code": self.code, "message": self.message, "details": self.details}


class IngestError(DaedalusError):
    """I/O or parse failure while loading a dataset or images."""

    code = "ingest-error"


class ParseError(IngestError):
    """Malformed manifest/CSV content; carries the offending line number."""

    code = "parse-error"

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line
        if line is not None:
            self.details = [{"line": line}]


class DatasetValidationError(DaedalusError):
    """Raised when a loaded dataset fails schema validation; aggregates the report."""

    code = "validation-error"

    def __init__(self, violations):
        msgs = [str(v) for v in violations]
        super().__init__(
            f"dataset failed validation with {len(violations)} violation(s)",
            details=msgs,
        )
        self.violations = list(violations)


class EncodingError(DaedalusError):
    """Feature encoding rejected its input (non-finite numeric, unknown category)."""

    code = "encoding-error"


class ConfigError(DaedalusError):
    """A configuration value violates its invariant."""

    code = "config-error"


class UnknownAttributeError(DaedalusError):
    """An operation referenced an attribute or alphabet the schema does not define."""

    code = "unknown-attribute"


class LabelStoreError(DaedalusError):
    """Label store operation rejected (duplicate name, assigned-label delete, ...)."""

    code = "labelstore-error"


class SnapshotError(DaedalusError):
    """Label snapshot import rejected; details carry JSON-pointer-ish paths."""

    code = "snapshot-error"


class BlockFormatError(DaedalusError):
    """A binary coordinate block is malformed (bad magic, truncation, wrong kind)."""

    code = "block-format"
