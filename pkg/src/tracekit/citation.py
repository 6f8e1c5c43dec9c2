"""Deep-link citation grammar binding manuscripts to evidence.

The canonical text form is ``\\trrracer{<project>}{<view>}{<granularity>}{<id>}``
with no internal whitespace.  ``view`` and ``granularity`` are closed sets:
unknown values are parse errors rather than pass-through, so every link in a
manuscript is verifiable.  Ids are free-form brace-free strings because
cited artifacts may carry foreign identifiers (e.g. links into an external
document store).

The URL form ``<base>/?project=..&view=..&granularity=..&id=..`` is the
interchange contract with the read-only web reader; this module also parses
it back so both sides stay inverse functions of each other.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Optional
from urllib.parse import parse_qs, quote, urlencode, urlsplit

from .errors import CitationParseError, GranularityMismatchError, NotFoundError, RejectionError
from .model import Activity, Artifact, Project, Thread

MACRO = "\\trrracer"
VIEWS = ("overview", "paper")
GRANULARITIES = ("activity", "artifact", "thread")
FIELD_NAMES = ("project", "view", "granularity", "id")

_MACRO_RE = re.compile(r"\\trrracer(?![A-Za-z])")


@dataclass(frozen=True)
class Citation:
    """A four-part deep link.  ``canonical`` records whether the parsed text
    was in canonical form; it does not participate in equality."""

    project: str
    view: str
    granularity: str
    id: str
    canonical: bool = field(default=True, compare=False)


def _check_field(name: str, value: str) -> None:
    if not value:
        raise RejectionError(f"citation {name} must be non-empty")
    if "{" in value or "}" in value:
        raise RejectionError(f"citation {name} must not contain braces")
    if any(ch.isspace() for ch in value):
        raise RejectionError(f"citation {name} must not contain whitespace")


def validate_citation(citation: Citation) -> None:
    for name, value in zip(FIELD_NAMES, (citation.project, citation.view, citation.granularity, citation.id)):
        _check_field(name, value)
    if citation.view not in VIEWS:
        raise RejectionError(f"unknown view {citation.view!r} (expected one of {', '.join(VIEWS)})")
    if citation.granularity not in GRANULARITIES:
        raise RejectionError(
            f"unknown granularity {citation.granularity!r} (expected one of {', '.join(GRANULARITIES)})"
        )


def format_citation(citation: Citation) -> str:
    """Render the canonical text form.  Deterministic; rejects bad fields."""
    validate_citation(citation)
    return f"{MACRO}{{{citation.project}}}{{{citation.view}}}{{{citation.granularity}}}{{{citation.id}}}"


def _parse_fields(text: str, pos: int) -> tuple[list[tuple[str, int]], int, bool]:
    """Parse four brace-delimited fields starting at ``pos``.

    Whitespace between and just inside braces is tolerated but marks the
    citation non-canonical.  Returns (fields as (value, offset), end
    position, canonical flag).
    """
    fields: list[tuple[str, int]] = []
    canonical = True
    for ordinal in range(4):
        gap_start = pos
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos > gap_start:
            canonical = False
        if pos >= len(text) or text[pos] != "{":
            raise CitationParseError(pos, f"expected '{{' to open the {FIELD_NAMES[ordinal]} field")
        pos += 1
        start = pos
        while pos < len(text) and text[pos] not in "{}":
            pos += 1
        if pos >= len(text) or text[pos] == "{":
            raise CitationParseError(min(pos, len(text)), f"unclosed {FIELD_NAMES[ordinal]} field")
        raw = text[start:pos]
        pos += 1
        value = raw.strip()
        if value != raw:
            canonical = False
        if not value:
            raise CitationParseError(start, f"empty {FIELD_NAMES[ordinal]} field")
        if any(ch.isspace() for ch in value):
            raise CitationParseError(start, f"whitespace inside the {FIELD_NAMES[ordinal]} field")
        fields.append((value, start))
    return fields, pos, canonical


def _citation_from_fields(fields: list[tuple[str, int]], canonical: bool) -> Citation:
    (project, _), (view, view_pos), (granularity, gran_pos), (cid, _) = fields
    if view not in VIEWS:
        raise CitationParseError(view_pos, f"unknown view {view!r}")
    if granularity not in GRANULARITIES:
        raise CitationParseError(gran_pos, f"unknown granularity {granularity!r}")
    return Citation(project, view, granularity, cid, canonical=canonical)


def parse_citation(text: str) -> Citation:
    """Parse a string holding exactly one citation.

    Leading/trailing whitespace and whitespace around braces are tolerated
    and recorded via ``canonical=False``.  Anything else raises
    :class:`CitationParseError` with the character position and reason.
    """
    pos = 0
    while pos < len(text) and text[pos].isspace():
        pos += 1
    canonical = pos == 0
    if not text.startswith(MACRO, pos):
        raise CitationParseError(pos, f"expected the {MACRO} macro")
    fields, end, fields_canonical = _parse_fields(text, pos + len(MACRO))
    tail = text[end:]
    if tail.strip():
        raise CitationParseError(end, "unexpected text after the id field (wrong arity?)")
    if tail:
        canonical = False
    return _citation_from_fields(fields, canonical and fields_canonical)


@dataclass(frozen=True)
class ScanHit:
    """One citation-shaped occurrence found while scanning free text."""

    start: int
    end: int
    text: str
    citation: Optional[Citation] = None
    error: Optional[str] = None


def scan_text(text: str) -> Iterator[ScanHit]:
    """Yield every citation macro occurrence in ``text``, parsed or broken.

    Malformed occurrences yield hits with ``error`` set; nothing is silently
    dropped, so callers can account for every grammar match.
    """
    for match in _MACRO_RE.finditer(text):
        start = match.start()
        try:
            fields, end, canonical = _parse_fields(text, match.end())
            yield ScanHit(start, end, text[start:end], citation=_citation_from_fields(fields, canonical))
        except CitationParseError as exc:
            snippet_end = min(max(exc.position, match.end()), start + 120, len(text))
            yield ScanHit(start, snippet_end, text[start:snippet_end], error=f"{exc.reason} (at offset {exc.position})")


@dataclass(frozen=True)
class ResolvedTarget:
    """The entity a citation points at, plus enclosing context."""

    granularity: str
    activity: Optional[Activity] = None
    artifact: Optional[Artifact] = None
    thread: Optional[Thread] = None


def _locate(project: Project, entity_id: str) -> Optional[str]:
    if project.find_activity(entity_id) is not None:
        return "activity"
    if project.find_artifact(entity_id) is not None:
        return "artifact"
    if project.find_thread(entity_id) is not None:
        return "thread"
    return None


def resolve_citation(project: Project, citation: Citation) -> ResolvedTarget:
    """Resolve a citation against a project, or explain exactly why not."""
    if citation.project != project.name:
        raise RejectionError(
            f"citation names project {citation.project!r} but this repository is {project.name!r}"
        )
    if citation.granularity == "activity":
        activity = project.find_activity(citation.id)
        if activity is not None:
            return ResolvedTarget("activity", activity=activity)
    elif citation.granularity == "artifact":
        found = project.find_artifact(citation.id)
        if found is not None:
            activity, artifact = found
            return ResolvedTarget("artifact", activity=activity, artifact=artifact)
    else:
        thread = project.find_thread(citation.id)
        if thread is not None:
            return ResolvedTarget("thread", thread=thread)

    actual = _locate(project, citation.id)
    if actual is not None:
        raise GranularityMismatchError(
            f"{citation.id} exists as a {actual}, not a {citation.granularity}"
        )
    raise NotFoundError(f"no {citation.granularity} with id {citation.id}")


def url_form(citation: Citation, base: str) -> str:
    """Render the shareable URL form under ``base`` with percent-encoding."""
    validate_citation(citation)
    query = urlencode(
        [
            ("project", citation.project),
            ("view", citation.view),
            ("granularity", citation.granularity),
            ("id", citation.id),
        ],
        quote_via=quote,
        safe="",
    )
    return f"{base.rstrip('/')}/?{query}"


def citation_from_url(url: str) -> Citation:
    """Inverse of :func:`url_form`; accepts a full URL or a bare query string."""
    query = urlsplit(url).query if "?" in url or "//" in url else url
    params = parse_qs(query, keep_blank_values=True)
    values = []
    for name in FIELD_NAMES:
        got = params.get(name, [])
        if len(got) != 1 or not got[0]:
            raise RejectionError(f"url query must carry exactly one non-empty {name!r} parameter")
        values.append(got[0])
    citation = Citation(*values)
    validate_citation(citation)
    return citation
