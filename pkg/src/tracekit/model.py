"""Domain model for traceable research projects.

A project is a value: activities containing annotated artifacts, curated
threads of evidence, a tag vocabulary, an alias registry for redaction, and
references to ingested reports.  All types are immutable once constructed;
every mutation produces a new ``Project``.  Persistence lives in
:mod:`tracekit.store`, thread lifecycle in :mod:`tracekit.threads`.

``validate_project`` checks every global rule and returns violations as
data, deterministically ordered, so the same broken project always yields
the same report.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Optional

from .errors import NotFoundError, RejectionError
from .ids import IdFactory, is_canonical_id, new_id

import re

PROJECT_NAME_PATTERN = re.compile(r"^[a-z0-9-]+$")

# Artifact kind vocabulary every new project starts with; extensible per project.
SEED_ARTIFACT_KINDS = (
    "email",
    "link",
    "memo",
    "notes",
    "photograph",
    "recording",
    "screenshot",
    "sketch",
    "sketchbook-page",
    "transcript",
)

MEDIA_CLASSES = frozenset({"text", "image", "audio", "video", "document"})

# File extension -> media class.  Doubles as the allowed-format whitelist:
# anything not listed here is rejected at ingest.
EXTENSION_MEDIA_CLASS = {
    "txt": "text",
    "md": "text",
    "csv": "text",
    "png": "image",
    "jpg": "image",
    "jpeg": "image",
    "gif": "image",
    "mp3": "audio",
    "wav": "audio",
    "mp4": "video",
    "pdf": "document",
}

THREAD_ACTIVE = "active"
THREAD_DEAD_END = "dead_end"
THREAD_MERGED_AWAY = "merged_away"
THREAD_STATUSES = frozenset({THREAD_ACTIVE, THREAD_DEAD_END, THREAD_MERGED_AWAY})

TIMING_RETROACTIVE = "retroactive"
TIMING_FORWARD = "forward"

GRANULARITY_ACTIVITY = "activity"
GRANULARITY_ARTIFACT = "artifact"
GRANULARITY_FRAGMENT = "fragment"
# Synthetic entries (merge notes, dead-end closing notes) have no target
# entity; they exist so the evidence list itself records the event.
GRANULARITY_NOTE = "note"
EVIDENCE_GRANULARITIES = frozenset(
    {GRANULARITY_ACTIVITY, GRANULARITY_ARTIFACT, GRANULARITY_FRAGMENT, GRANULARITY_NOTE}
)


# ── Timestamps ──────────────────────────────────────────────────────

TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M:%SZ"


def now_utc() -> datetime:
    """Current UTC time truncated to seconds (the stored precision)."""
    return datetime.now(timezone.utc).replace(microsecond=0)


def normalize_timestamp(value: datetime) -> datetime:
    """Coerce to aware UTC, seconds precision.  Naive input is taken as UTC."""
    if value.tzinfo is None:
        value = value.replace(tzinfo=timezone.utc)
    return value.astimezone(timezone.utc).replace(microsecond=0)


def format_timestamp(value: datetime) -> str:
    return normalize_timestamp(value).strftime(TIMESTAMP_FORMAT)


def parse_timestamp(text: str) -> datetime:
    """Parse an ISO-8601 timestamp; bare dates get midnight UTC."""
    raw = text.strip()
    if raw.endswith("Z"):
        raw = raw[:-1] + "+00:00"
    try:
        parsed = datetime.fromisoformat(raw)
    except ValueError as exc:
        raise RejectionError(f"invalid timestamp {text!r}: {exc}") from None
    return normalize_timestamp(parsed)


# ── Domain types ────────────────────────────────────────────────────


@dataclass(frozen=True)
class Tag:
    """A lightweight label; ``note`` records what it means in this project."""

    label: str
    note: str = ""


@dataclass(frozen=True)
class Fragment:
    """A highlighted span of a text artifact.

    Offsets are 0-based character positions, start inclusive, end exclusive.
    ``quoted_text`` holds the verbatim excerpt and is the authority for
    detecting drift when the underlying file changes outside the tool.
    """

    start: int
    end: int
    quoted_text: str


@dataclass(frozen=True)
class EvidenceTarget:
    """What a piece of evidence points at, at one of four granularities."""

    granularity: str
    activity_id: str = ""
    artifact_id: str = ""
    fragment: Optional[Fragment] = None


@dataclass(frozen=True)
class EvidenceEntry:
    """One curated item in a thread: a target plus a mandatory rationale.

    ``timing`` is derived (retroactive iff the target activity predates the
    thread) and stored so readers never reclassify.
    """

    target: EvidenceTarget
    rationale: str
    added_at: datetime
    timing: str


@dataclass(frozen=True)
class Artifact:
    id: str
    kind: str
    description: str
    file_ref: str
    media_class: str
    checksum: str
    tags: tuple[str, ...] = ()
    private: bool = False
    # Binary media cannot be reliably redacted; export is fail-closed and
    # skips binary artifacts unless this is set.
    cleared_for_export: bool = False


@dataclass(frozen=True)
class Activity:
    """A dated research event that artifacts attach to.

    ``occurred_at`` is when the event happened; ``recorded_at`` is when it
    was digitized.  Retro-digitization means occurred_at may be long before
    recorded_at, and nothing orders the two.
    """

    id: str
    title: str
    occurred_at: datetime
    recorded_at: datetime
    tags: tuple[str, ...] = ()
    private: bool = False
    artifacts: tuple[Artifact, ...] = ()


@dataclass(frozen=True)
class Thread:
    id: str
    name: str
    description: str
    created_at: datetime
    status: str = THREAD_ACTIVE
    evidence: tuple[EvidenceEntry, ...] = ()
    merged_from: tuple[str, ...] = ()
    branched_from: Optional[str] = None


@dataclass(frozen=True)
class AliasEntry:
    """A name to redact on export and the text that replaces it."""

    full_name: str
    replacement: str


@dataclass(frozen=True)
class ReportRef:
    id: str
    path: str
    title: str


@dataclass(frozen=True)
class Project:
    name: str
    title: str
    created_at: datetime
    activities: tuple[Activity, ...] = ()
    threads: tuple[Thread, ...] = ()
    tag_vocabulary: tuple[Tag, ...] = ()
    kind_vocabulary: tuple[str, ...] = SEED_ARTIFACT_KINDS
    alias_registry: tuple[AliasEntry, ...] = ()
    reports: tuple[ReportRef, ...] = ()

    # -- lookups ------------------------------------------------------

    def find_activity(self, activity_id: str) -> Optional[Activity]:
        for activity in self.activities:
            if activity.id == activity_id:
                return activity
        return None

    def find_artifact(self, artifact_id: str) -> Optional[tuple[Activity, Artifact]]:
        """Return ``(enclosing activity, artifact)`` or None."""
        for activity in self.activities:
            for artifact in activity.artifacts:
                if artifact.id == artifact_id:
                    return activity, artifact
        return None

    def find_thread(self, thread_id: str) -> Optional[Thread]:
        for thread in self.threads:
            if thread.id == thread_id:
                return thread
        return None

    def find_report(self, report_id: str) -> Optional[ReportRef]:
        for report in self.reports:
            if report.id == report_id:
                return report
        return None

    def all_entity_ids(self) -> list[tuple[str, str]]:
        """Every (kind, id) pair subject to the global-uniqueness rule."""
        pairs: list[tuple[str, str]] = []
        for activity in self.activities:
            pairs.append(("activity", activity.id))
            for artifact in activity.artifacts:
                pairs.append(("artifact", artifact.id))
        for thread in self.threads:
            pairs.append(("thread", thread.id))
        for report in self.reports:
            pairs.append(("report", report.id))
        return pairs

    # -- structural editing (returns new Project) ---------------------
    # Top-level collections stay sorted by id so the manifest's stable
    # entity order is also the in-memory order (round-trip equality).

    def with_activity(self, activity: Activity) -> "Project":
        updated = tuple(sorted(self.activities + (activity,), key=lambda a: a.id))
        return replace(self, activities=updated)

    def replace_activity(self, activity: Activity) -> "Project":
        updated = tuple(a if a.id != activity.id else activity for a in self.activities)
        return replace(self, activities=updated)

    def with_thread(self, thread: Thread) -> "Project":
        updated = tuple(sorted(self.threads + (thread,), key=lambda t: t.id))
        return replace(self, threads=updated)

    def replace_thread(self, thread: Thread) -> "Project":
        updated = tuple(t if t.id != thread.id else thread for t in self.threads)
        return replace(self, threads=updated)

    def with_report(self, report: ReportRef) -> "Project":
        updated = tuple(sorted(self.reports + (report,), key=lambda r: r.id))
        return replace(self, reports=updated)


# ── Timing classification ───────────────────────────────────────────


def classify_timing(activity_occurred_at: datetime, thread_created_at: datetime) -> str:
    """Classify evidence as retroactive or forward.

    Retroactive iff the activity occurred strictly before the thread was
    created; ties count as forward.
    """
    occurred = normalize_timestamp(activity_occurred_at)
    created = normalize_timestamp(thread_created_at)
    return TIMING_RETROACTIVE if occurred < created else TIMING_FORWARD


# ── Recording operations ────────────────────────────────────────────


def _vocabulary_label(project: Project, label: str) -> Optional[str]:
    lowered = label.lower()
    for tag in project.tag_vocabulary:
        if tag.label.lower() == lowered:
            return tag.label
    return None


def normalize_tags(project: Project, labels: Iterable[str]) -> tuple[Project, tuple[str, ...]]:
    """Resolve labels against the vocabulary, extending it for new ones.

    Returns the (possibly extended) project and the canonical labels to
    store on the entity, deduplicated and sorted.  A label that matches an
    existing vocabulary entry case-insensitively reuses that entry's
    spelling so the case-insensitive uniqueness rule holds.
    """
    canonical: list[str] = []
    for label in labels:
        label = label.strip()
        if not label:
            raise RejectionError("tag label must be non-empty")
        existing = _vocabulary_label(project, label)
        if existing is None:
            vocabulary = sorted(project.tag_vocabulary + (Tag(label),), key=lambda t: (t.label.lower(), t.label))
            project = replace(project, tag_vocabulary=tuple(vocabulary))
            existing = label
        if existing not in canonical:
            canonical.append(existing)
    return project, tuple(sorted(canonical))


def add_activity(
    project: Project,
    title: str,
    occurred_at: datetime,
    *,
    tags: Iterable[str] = (),
    private: bool = False,
    recorded_at: Optional[datetime] = None,
    id_factory: IdFactory = new_id,
) -> tuple[Project, str]:
    """Record a research event.  Title is mandatory; timestamps may disagree
    in either direction (retro-digitization is normal)."""
    if not title.strip():
        raise RejectionError("activity title required")
    project, tag_labels = normalize_tags(project, tags)
    activity = Activity(
        id=id_factory(),
        title=title,
        occurred_at=normalize_timestamp(occurred_at),
        recorded_at=normalize_timestamp(recorded_at or now_utc()),
        tags=tag_labels,
        private=private,
    )
    return project.with_activity(activity), activity.id


def tag_entity(project: Project, entity_id: str, labels: Iterable[str]) -> Project:
    """Attach tag labels to an activity or artifact, extending the vocabulary."""
    labels = list(labels)
    if not labels:
        raise RejectionError("at least one tag label required")
    project, tag_labels = normalize_tags(project, labels)

    activity = project.find_activity(entity_id)
    if activity is not None:
        merged = tuple(sorted(set(activity.tags) | set(tag_labels)))
        return project.replace_activity(replace(activity, tags=merged))

    found = project.find_artifact(entity_id)
    if found is not None:
        owner, artifact = found
        merged = tuple(sorted(set(artifact.tags) | set(tag_labels)))
        updated = replace(artifact, tags=merged)
        artifacts = tuple(a if a.id != artifact.id else updated for a in owner.artifacts)
        return project.replace_activity(replace(owner, artifacts=artifacts))

    raise NotFoundError(f"no activity or artifact with id {entity_id}")


def ensure_kind(project: Project, kind: str) -> tuple[Project, str]:
    """Resolve an artifact kind label, extending the kind vocabulary if new."""
    kind = kind.strip()
    if not kind:
        raise RejectionError("artifact kind required")
    if kind in project.kind_vocabulary:
        return project, kind
    vocabulary = tuple(sorted(project.kind_vocabulary + (kind,)))
    return replace(project, kind_vocabulary=vocabulary), kind


# ── Validation ──────────────────────────────────────────────────────


@dataclass(frozen=True)
class Violation:
    """One broken rule, naming the entity and the rule it violates."""

    entity_id: str
    rule: str
    message: str

    def __str__(self) -> str:
        return self.message


ValidationReport = list[Violation]


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()


def _resolves_within(root: Path, relative: str) -> Optional[Path]:
    """Resolve ``relative`` under ``root``; None if it escapes the root."""
    candidate = (root / relative).resolve()
    try:
        candidate.relative_to(root.resolve())
    except ValueError:
        return None
    return candidate


def validate_project(project: Project, repo_root: Optional[Path] = None) -> ValidationReport:
    """Check every invariant; violations are data, not failures.

    Structural rules are always checked.  File-backed rules (artifact bytes
    exist and hash to the recorded checksum, fragment anchors still match,
    report paths resolve, no orphan files) run only when ``repo_root`` is
    given.  The report is deterministic: sorted by entity id, then rule.
    """
    violations: list[Violation] = []

    def flag(entity_id: str, rule: str, message: str) -> None:
        violations.append(Violation(entity_id, rule, message))

    if not project.name or not PROJECT_NAME_PATTERN.match(project.name):
        flag(
            project.name or "(project)",
            "bad-project-name",
            f"project {project.name!r}: name must be non-empty lowercase letters, digits, hyphens",
        )

    # Global id uniqueness across activities, artifacts, threads, reports.
    seen: dict[str, str] = {}
    for kind, entity_id in project.all_entity_ids():
        if entity_id in seen:
            flag(entity_id, "duplicate-id", f"{kind} {entity_id}: id already used by a {seen[entity_id]}")
        else:
            seen[entity_id] = kind

    # Vocabularies.
    lowered_tags: dict[str, str] = {}
    for tag in project.tag_vocabulary:
        if not tag.label:
            flag("(tags)", "empty-tag-label", "tag vocabulary: empty label")
            continue
        key = tag.label.lower()
        if key in lowered_tags:
            flag(
                tag.label,
                "duplicate-tag",
                f"tag {tag.label!r}: duplicates {lowered_tags[key]!r} case-insensitively",
            )
        else:
            lowered_tags[key] = tag.label
    kind_seen = set()
    for kind_label in project.kind_vocabulary:
        if not kind_label:
            flag("(kinds)", "empty-kind-label", "kind vocabulary: empty label")
        elif kind_label in kind_seen:
            flag(kind_label, "duplicate-kind", f"artifact kind {kind_label!r}: duplicate label")
        else:
            kind_seen.add(kind_label)

    files_root = repo_root / "files" if repo_root else None
    referenced_files: set[str] = set()

    for activity in project.activities:
        if not is_canonical_id(activity.id):
            flag(activity.id, "bad-id-form", f"activity {activity.id}: id not in canonical form")
        if not activity.title.strip():
            flag(activity.id, "missing-title", f"activity {activity.id}: missing title")
        for label in activity.tags:
            if label.lower() not in lowered_tags:
                flag(activity.id, "unknown-tag", f"activity {activity.id}: tag {label!r} not in vocabulary")
        for artifact in activity.artifacts:
            _validate_artifact(project, activity, artifact, repo_root, lowered_tags, flag)
            referenced_files.add(artifact.file_ref)

    thread_ids = {t.id for t in project.threads}
    merged_refs: dict[str, list[str]] = {}
    for thread in project.threads:
        _validate_thread(project, thread, repo_root, flag)
        for absorbed_id in thread.merged_from:
            merged_refs.setdefault(absorbed_id, []).append(thread.id)
            if absorbed_id not in thread_ids:
                flag(thread.id, "dangling-reference", f"thread {thread.id}: merged_from {absorbed_id} does not exist")
        if thread.branched_from is not None and thread.branched_from not in thread_ids:
            flag(thread.id, "dangling-reference", f"thread {thread.id}: branched_from {thread.branched_from} does not exist")

    for thread in project.threads:
        refs = merged_refs.get(thread.id, [])
        if thread.status == THREAD_MERGED_AWAY and len(refs) != 1:
            flag(
                thread.id,
                "merge-lineage",
                f"thread {thread.id}: merged_away but referenced by {len(refs)} merged_from sets (expected 1)",
            )
        if thread.status != THREAD_MERGED_AWAY and refs:
            flag(
                thread.id,
                "merge-lineage",
                f"thread {thread.id}: listed in merged_from of {refs[0]} but status is {thread.status}",
            )

    _check_lineage_cycles(project, flag)

    alias_names: dict[str, str] = {}
    for alias in project.alias_registry:
        if not alias.full_name.strip():
            flag("(aliases)", "alias-invalid", "alias registry: empty full name")
            continue
        if not alias.replacement.strip():
            flag(alias.full_name, "alias-invalid", f"alias {alias.full_name!r}: empty replacement")
        if alias.replacement == alias.full_name:
            flag(alias.full_name, "alias-invalid", f"alias {alias.full_name!r}: replacement equals the name")
        key = alias.full_name.lower()
        if key in alias_names:
            flag(alias.full_name, "duplicate-alias", f"alias {alias.full_name!r}: already registered")
        alias_names[key] = alias.full_name
    for alias in project.alias_registry:
        for other in project.alias_registry:
            if other.full_name.lower() in alias.replacement.lower():
                flag(
                    alias.full_name,
                    "alias-leak-risk",
                    f"alias {alias.full_name!r}: replacement contains registered name {other.full_name!r}",
                )

    for report in project.reports:
        if repo_root is not None:
            resolved = _resolves_within(repo_root, report.path)
            if resolved is None or not resolved.is_file():
                flag(report.id, "report-path", f"report {report.id}: path {report.path!r} does not resolve within the repository")

    if files_root is not None and files_root.is_dir():
        for entry in sorted(files_root.iterdir()):
            rel = str(Path("files") / entry.name)
            if entry.is_file() and rel not in referenced_files:
                flag(entry.name, "orphan-file", f"file {rel}: not referenced by any artifact")

    violations.sort(key=lambda v: (v.entity_id, v.rule, v.message))
    return violations


def _validate_artifact(project, activity, artifact, repo_root, lowered_tags, flag) -> None:
    if not is_canonical_id(artifact.id):
        flag(artifact.id, "bad-id-form", f"artifact {artifact.id}: id not in canonical form")
    if not artifact.kind.strip():
        flag(artifact.id, "missing-kind", f"artifact {artifact.id}: missing kind")
    elif artifact.kind not in project.kind_vocabulary:
        flag(artifact.id, "unknown-kind", f"artifact {artifact.id}: kind {artifact.kind!r} not in vocabulary")
    if not artifact.description.strip():
        flag(artifact.id, "missing-description", f"artifact {artifact.id}: missing description")
    if artifact.media_class not in MEDIA_CLASSES:
        flag(artifact.id, "bad-media-class", f"artifact {artifact.id}: unknown media class {artifact.media_class!r}")
    for label in artifact.tags:
        if label.lower() not in lowered_tags:
            flag(artifact.id, "unknown-tag", f"artifact {artifact.id}: tag {label!r} not in vocabulary")

    extension = artifact.file_ref.rsplit(".", 1)[-1].lower() if "." in artifact.file_ref else ""
    expected_class = EXTENSION_MEDIA_CLASS.get(extension)
    if expected_class is not None and expected_class != artifact.media_class:
        flag(
            artifact.id,
            "media-class-mismatch",
            f"artifact {artifact.id}: media class {artifact.media_class!r} inconsistent with .{extension}",
        )

    if repo_root is not None:
        path = _resolves_within(repo_root, artifact.file_ref)
        if path is None or not path.is_file():
            flag(artifact.id, "missing-file", f"artifact {artifact.id}: file {artifact.file_ref!r} not found")
        elif sha256_file(path) != artifact.checksum:
            flag(artifact.id, "checksum-mismatch", f"artifact {artifact.id}: stored bytes do not hash to recorded checksum")


def _validate_thread(project, thread, repo_root, flag) -> None:
    if not thread.name.strip():
        flag(thread.id, "missing-name", f"thread {thread.id}: missing name")
    if not thread.description.strip():
        flag(thread.id, "missing-description", f"thread {thread.id}: missing description")
    if not is_canonical_id(thread.id):
        flag(thread.id, "bad-id-form", f"thread {thread.id}: id not in canonical form")
    if thread.status not in THREAD_STATUSES:
        flag(thread.id, "bad-status", f"thread {thread.id}: unknown status {thread.status!r}")

    for index, entry in enumerate(thread.evidence):
        label = f"thread {thread.id} evidence[{index}]"
        if not entry.rationale.strip():
            flag(thread.id, "missing-rationale", f"{label}: missing rationale")
        if entry.target.granularity not in EVIDENCE_GRANULARITIES:
            flag(thread.id, "bad-granularity", f"{label}: unknown granularity {entry.target.granularity!r}")
            continue
        _validate_target(project, thread, entry, label, repo_root, flag)


def _validate_target(project, thread, entry, label, repo_root, flag) -> None:
    target = entry.target
    granularity = target.granularity

    if granularity == GRANULARITY_NOTE:
        if target.activity_id or target.artifact_id or target.fragment is not None:
            flag(thread.id, "bad-target", f"{label}: note entries carry no target ids")
        if entry.timing != TIMING_FORWARD:
            flag(thread.id, "bad-timing", f"{label}: note entries are always forward")
        return

    wants_artifact = granularity in (GRANULARITY_ARTIFACT, GRANULARITY_FRAGMENT)
    if not target.activity_id:
        flag(thread.id, "bad-target", f"{label}: missing activity id")
        return
    if bool(target.artifact_id) != wants_artifact:
        flag(thread.id, "bad-target", f"{label}: artifact id must be present iff granularity is artifact or fragment")
        return
    if (target.fragment is not None) != (granularity == GRANULARITY_FRAGMENT):
        flag(thread.id, "bad-target", f"{label}: fragment must be present iff granularity is fragment")
        return

    activity = project.find_activity(target.activity_id)
    if activity is None:
        flag(thread.id, "dangling-reference", f"{label}: activity {target.activity_id} does not exist")
        return

    artifact = None
    if wants_artifact:
        artifact = next((a for a in activity.artifacts if a.id == target.artifact_id), None)
        if artifact is None:
            flag(
                thread.id,
                "dangling-reference",
                f"{label}: artifact {target.artifact_id} not found in activity {target.activity_id}",
            )
            return

    expected = classify_timing(activity.occurred_at, thread.created_at)
    if entry.timing != expected:
        flag(thread.id, "bad-timing", f"{label}: stored timing {entry.timing!r}, expected {expected!r}")

    if target.fragment is not None:
        fragment = target.fragment
        if not (0 <= fragment.start < fragment.end):
            flag(thread.id, "bad-fragment", f"{label}: offsets [{fragment.start}, {fragment.end}) are not a valid span")
        elif artifact is not None:
            if artifact.media_class != "text":
                flag(thread.id, "bad-fragment", f"{label}: fragment of non-text artifact {artifact.id}")
            elif repo_root is not None:
                path = _resolves_within(repo_root, artifact.file_ref)
                if path is not None and path.is_file():
                    text = path.read_text(encoding="utf-8")
                    if fragment.end > len(text) or text[fragment.start : fragment.end] != fragment.quoted_text:
                        flag(
                            thread.id,
                            "fragment-drift",
                            f"{label}: quoted text no longer matches offsets [{fragment.start}, {fragment.end})",
                        )


def _check_lineage_cycles(project: Project, flag) -> None:
    # Branching out and later merging back is legitimate convergence, so the
    # two lineage relations are checked for cycles separately: a cycle within
    # branched_from alone or within merged_from alone is temporally
    # impossible and marks a corrupt manifest.
    known = {thread.id for thread in project.threads}
    branch_edges = {
        t.id: [t.branched_from] if t.branched_from in known else [] for t in project.threads
    }
    merge_edges = {t.id: [m for m in t.merged_from if m in known] for t in project.threads}

    for relation, edges in (("branched_from", branch_edges), ("merged_from", merge_edges)):
        WHITE, GRAY, BLACK = 0, 1, 2
        color = {tid: WHITE for tid in edges}

        def visit(tid: str) -> bool:
            color[tid] = GRAY
            for parent in edges[tid]:
                if color[parent] == GRAY:
                    return True
                if color[parent] == WHITE and visit(parent):
                    return True
            color[tid] = BLACK
            return False

        for tid in sorted(edges):
            if color[tid] == WHITE and visit(tid):
                flag(tid, "lineage-cycle", f"thread {tid}: cycle in the {relation} lineage")
                # Reset grays so later roots report their own cycles.
                for key, value in color.items():
                    if value == GRAY:
                        color[key] = WHITE
