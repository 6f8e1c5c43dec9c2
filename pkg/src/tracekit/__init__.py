"""tracekit: record, thread, cite, and publish the evidence of a design process.

The toolkit keeps a research project as a plain-file repository: activities
hold typed, annotated artifacts; threads curate evidence with rationales;
citations deep-link manuscripts to any of it; and a redacted, self-contained
bundle exposes the whole trail to outside readers.
"""

from .model import (
    Activity,
    AliasEntry,
    Artifact,
    EvidenceEntry,
    EvidenceTarget,
    Fragment,
    Project,
    ReportRef,
    Tag,
    Thread,
    Violation,
    classify_timing,
    validate_project,
)
from .citation import Citation, format_citation, parse_citation, resolve_citation, url_form
from .store import init_repo, ingest_artifact, load_project, save_project
from .threads import (
    add_evidence,
    branch_thread,
    create_thread,
    extract_fragment,
    mark_dead_end,
    merge_threads,
    remove_evidence,
    seed_from_tag,
)
from .reports import index_report, ingest_report, verify_report
from .export import export_bundle, redact_text, register_alias, verify_bundle

__version__ = "0.1.0"

__all__ = [
    "Activity",
    "AliasEntry",
    "Artifact",
    "Citation",
    "EvidenceEntry",
    "EvidenceTarget",
    "Fragment",
    "Project",
    "ReportRef",
    "Tag",
    "Thread",
    "Violation",
    "add_evidence",
    "branch_thread",
    "classify_timing",
    "create_thread",
    "export_bundle",
    "extract_fragment",
    "format_citation",
    "index_report",
    "ingest_artifact",
    "ingest_report",
    "init_repo",
    "load_project",
    "mark_dead_end",
    "merge_threads",
    "parse_citation",
    "redact_text",
    "register_alias",
    "remove_evidence",
    "resolve_citation",
    "save_project",
    "seed_from_tag",
    "url_form",
    "validate_project",
    "verify_bundle",
    "verify_report",
]
