"""Exception hierarchy shared across the toolkit.

Domain rejections (``RejectionError`` and subclasses) mean the caller asked
for something the rules forbid; the repository is left untouched.  They map
to exit code 1 in the CLI.  Everything else under ``TraceError`` is an
infrastructure failure (corrupt manifest, held lock).
"""

from __future__ import annotations


class TraceError(Exception):
    """Base class for all toolkit errors."""


class RejectionError(TraceError):
    """A domain rule rejected the operation (bad input, wrong state)."""


class NotFoundError(RejectionError):
    """A referenced entity does not exist in the project."""


class GranularityMismatchError(RejectionError):
    """An id exists but under a different granularity than cited."""


class LockHeldError(TraceError):
    """Another writer holds the repository lock."""

    def __init__(self, message: str, holder: dict | None = None):
        super().__init__(message)
        self.holder = holder or {}


class ManifestError(TraceError):
    """The repository manifest is missing or cannot be parsed."""


class CitationParseError(TraceError):
    """A citation string does not match the grammar.

    ``position`` is the character offset in the input where parsing failed;
    ``reason`` is a short human-readable explanation.
    """

    def __init__(self, position: int, reason: str):
        super().__init__(f"citation parse error at position {position}: {reason}")
        self.position = position
        self.reason = reason
