"""Manuscript ingestion, citation indexing, and link verification.

A report is a plain-text manuscript with ``#``-style headings.  Indexing
scans the whole file for the citation grammar, resolves every hit against
the project, and buckets placed citations by enclosing top-level section
(text before the first heading is the preamble, ordinal 0).  Problems are
data: malformed or unresolvable citations land in the ``broken`` list with
positions and reasons, and nothing is silently dropped.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from .citation import Citation, format_citation, resolve_citation, scan_text
from .errors import NotFoundError, RejectionError, TraceError
from .ids import IdFactory, new_id
from .model import Project, ReportRef
from .store import REPORTS_DIR, RepositoryLayout

_TOP_HEADING_RE = re.compile(r"^#(?!#)\s*(.*)$", re.MULTILINE)


@dataclass(frozen=True)
class PlacedCitation:
    citation: Citation
    char_offset: int


@dataclass(frozen=True)
class BrokenCitation:
    text: str
    position: int
    reason: str


@dataclass(frozen=True)
class ReportSection:
    heading: str
    ordinal: int
    citations: tuple[PlacedCitation, ...]


@dataclass(frozen=True)
class ReportIndex:
    report_id: str
    sections: tuple[ReportSection, ...]
    broken: tuple[BrokenCitation, ...]

    @property
    def placed_count(self) -> int:
        return sum(len(section.citations) for section in self.sections)


def ingest_report(
    root: Path,
    project: Project,
    path: Path,
    title: str,
    *,
    id_factory: IdFactory = new_id,
) -> tuple[Project, str]:
    """Copy a manuscript into the repository and register it."""
    root = Path(root)
    path = Path(path)
    if not path.is_file():
        raise RejectionError(f"report file {path} not readable")
    try:
        text = path.read_bytes().decode("utf-8")
    except UnicodeDecodeError as exc:
        raise RejectionError(f"report file {path} is not UTF-8 text ({exc.reason} at byte {exc.start})") from None

    report_id = id_factory()
    suffix = path.suffix.lstrip(".").lower() or "md"
    layout = RepositoryLayout(root)
    layout.reports_dir.mkdir(parents=True, exist_ok=True)
    stored = layout.reports_dir / f"{report_id}.{suffix}"
    stored.write_text(text, encoding="utf-8")
    report = ReportRef(id=report_id, path=f"{REPORTS_DIR}/{report_id}.{suffix}", title=title)
    return project.with_report(report), report_id


def _report_text(root: Path, project: Project, report_id: str) -> str:
    report = project.find_report(report_id)
    if report is None:
        raise NotFoundError(f"no report with id {report_id}")
    path = Path(root) / report.path
    if not path.is_file():
        raise RejectionError(f"report file {report.path} missing from the repository")
    return path.read_text(encoding="utf-8")


def index_text(project: Project, report_id: str, text: str) -> ReportIndex:
    """Index manuscript text against a project (pure; used by export too)."""
    boundaries: list[tuple[int, str]] = [
        (match.start(), match.group(1).strip()) for match in _TOP_HEADING_RE.finditer(text)
    ]

    placed: list[tuple[int, PlacedCitation]] = []
    broken: list[BrokenCitation] = []
    for hit in scan_text(text):
        if hit.citation is None:
            broken.append(BrokenCitation(text=hit.text, position=hit.start, reason=hit.error or "malformed"))
            continue
        try:
            resolve_citation(project, hit.citation)
        except TraceError as exc:
            broken.append(
                BrokenCitation(text=format_citation(hit.citation), position=hit.start, reason=str(exc))
            )
            continue
        placed.append((hit.start, PlacedCitation(citation=hit.citation, char_offset=hit.start)))

    # Bucket by enclosing section.  The preamble only appears when it holds
    # citations; headings always appear, empty or not.
    sections: list[ReportSection] = []
    preamble_end = boundaries[0][0] if boundaries else len(text) + 1
    preamble_hits = tuple(c for offset, c in placed if offset < preamble_end)
    if preamble_hits:
        sections.append(ReportSection(heading="", ordinal=0, citations=preamble_hits))
    for ordinal, (start, heading) in enumerate(boundaries, start=1):
        end = boundaries[ordinal][0] if ordinal < len(boundaries) else len(text) + 1
        in_section = tuple(c for offset, c in placed if start <= offset < end)
        sections.append(ReportSection(heading=heading, ordinal=ordinal, citations=in_section))

    return ReportIndex(report_id=report_id, sections=tuple(sections), broken=tuple(broken))


def index_report(root: Path, project: Project, report_id: str) -> ReportIndex:
    """Scan an ingested report and build its per-section citation index."""
    return index_text(project, report_id, _report_text(root, project, report_id))


def index_to_dict(index: ReportIndex) -> dict:
    """Serialize an index for bundling (``reports/<id>.index.json``)."""
    return {
        "report_id": index.report_id,
        "sections": [
            {
                "heading": section.heading,
                "ordinal": section.ordinal,
                "citations": [
                    {
                        "citation": {
                            "project": item.citation.project,
                            "view": item.citation.view,
                            "granularity": item.citation.granularity,
                            "id": item.citation.id,
                        },
                        "char_offset": item.char_offset,
                    }
                    for item in section.citations
                ],
            }
            for section in index.sections
        ],
        "broken": [
            {"text": item.text, "position": item.position, "reason": item.reason}
            for item in index.broken
        ],
    }


@dataclass(frozen=True)
class ReportVerification:
    passed: bool
    index: ReportIndex
    reasons: tuple[str, ...]


def verify_report(root: Path, project: Project, report_id: str) -> ReportVerification:
    """Gate a report: pass iff no broken citations and no private targets.

    A citation whose target would not survive a bundle export (private
    entity, artifact inside a private activity, uncleared binary media, or
    a thread whose evidence would be entirely withheld) would dangle in the
    published bundle, so it fails verification here, with a reason naming
    the entity.
    """
    from .export import plan_export  # local import; export also consumes this module

    index = index_report(root, project, report_id)
    reasons = [
        f"broken citation at offset {item.position}: {item.reason}" for item in index.broken
    ]

    plan = plan_export(project)
    for section in index.sections:
        for item in section.citations:
            citation = item.citation
            if citation.granularity == "activity":
                if citation.id in plan.excluded_activities:
                    reasons.append(f"cites private activity {citation.id}")
            elif citation.granularity == "artifact":
                if citation.id in plan.excluded_artifacts:
                    reasons.append(
                        f"cites artifact {citation.id} that is withheld from export"
                        f" ({plan.excluded_artifacts[citation.id]})"
                    )
            else:
                if citation.id in plan.dropped_threads:
                    reasons.append(f"cites thread {citation.id} whose evidence is entirely withheld")

    return ReportVerification(passed=not reasons, index=index, reasons=tuple(reasons))
