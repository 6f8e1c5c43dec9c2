"""Redacted, self-contained, read-only bundle export and its auditor.

A bundle is what external readers get: ``bundle.json`` (the redacted
project plus a chronological activity index), ``files/`` (non-private
artifact bytes, text redacted through the alias registry), ``reports/``
(redacted manuscripts plus their citation indexes), and ``checksums.txt``
covering every bundled file.

Privacy is fail-closed: private activities and artifacts never appear,
and binary media (which cannot be reliably redacted) are excluded unless
explicitly cleared for export.  Threads keep whatever evidence survives
and record how many entries were withheld; threads losing all their
evidence are dropped, and lineage references to dropped threads are
scrubbed so everything in the bundle resolves within the bundle.

Export is deterministic: the same project state always produces
byte-identical bundles, so redundant copies are verifiable by checksum.
"""

from __future__ import annotations

import json
import re
import shutil
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .errors import RejectionError
from .model import (
    Activity,
    AliasEntry,
    Artifact,
    EvidenceEntry,
    Fragment,
    GRANULARITY_ACTIVITY,
    GRANULARITY_NOTE,
    Project,
    Tag,
    Thread,
    Violation,
    format_timestamp,
    sha256_file,
    validate_project,
)
from .store import (
    FILES_DIR,
    REPORTS_DIR,
    activity_to_dict,
    thread_to_dict,
)

BUNDLE_MANIFEST = "bundle.json"
CHECKSUMS_NAME = "checksums.txt"
BUNDLE_SCHEMA_VERSION = 1

TEXT_EXTENSIONS = {"txt", "md", "csv", "json"}

# bundle.json keys whose string values are structural (identifiers, hashes,
# timestamps, enum literals) rather than annotation text; the leak scan
# skips them and checks everything else.
STRUCTURAL_KEYS = {
    "id",
    "activity_id",
    "artifact_id",
    "branched_from",
    "merged_from",
    "activity_index",
    "file_ref",
    "path",
    "checksum",
    "created_at",
    "occurred_at",
    "recorded_at",
    "added_at",
    "timing",
    "status",
    "granularity",
    "media_class",
    "view",
    "project",
    "report_id",
    "schema_version",
    "char_offset",
    "position",
    "ordinal",
    "start",
    "end",
    "withheld_count",
}


# ── Alias registry ──────────────────────────────────────────────────


def default_alias(full_name: str) -> str:
    """Initials: first letter of each whitespace-separated word, uppercased."""
    return "".join(word[0].upper() for word in full_name.split())


_HEXISH_RE = re.compile(r"^[0-9a-f-]+$")


def register_alias(project: Project, full_name: str, replacement: Optional[str] = None) -> Project:
    """Add a name to redact on export; replacement defaults to initials.

    Registration is where leak safety is enforced: no replacement may
    contain a registered name (in either direction, so redaction stays
    idempotent and terminating), and names that could collide with
    structural identifiers are refused outright.
    """
    full_name = full_name.strip()
    if not full_name:
        raise RejectionError("full name required")
    if replacement is None:
        replacement = default_alias(full_name)
    replacement = replacement.strip()
    if not replacement:
        raise RejectionError("replacement must be non-empty")
    if replacement == full_name:
        raise RejectionError("replacement must differ from the name it hides")

    lowered = full_name.lower()
    if _HEXISH_RE.match(lowered):
        raise RejectionError(
            f"cannot register {full_name!r}: entirely hex-like, could collide with entity ids"
        )
    if lowered in project.name.lower():
        raise RejectionError(f"cannot register {full_name!r}: contained in the project name")

    if lowered in replacement.lower():
        raise RejectionError(f"replacement {replacement!r} contains the name it should hide")
    for entry in project.alias_registry:
        if entry.full_name.lower() == lowered:
            raise RejectionError(f"{full_name!r} is already registered")
        if entry.full_name.lower() in replacement.lower():
            raise RejectionError(
                f"replacement {replacement!r} contains registered name {entry.full_name!r}"
            )
        if lowered in entry.replacement.lower():
            raise RejectionError(
                f"{full_name!r} appears in the replacement for {entry.full_name!r}; register it first"
            )

    registry = tuple(sorted(project.alias_registry + (AliasEntry(full_name, replacement),), key=lambda a: a.full_name))
    return replace(project, alias_registry=registry)


# ── Redaction engine ────────────────────────────────────────────────


@dataclass(frozen=True)
class _Region:
    """One replacement: [old_start, old_end) became [new_start, new_end)."""

    old_start: int
    old_end: int
    new_start: int
    new_end: int


def _registry_pattern(registry: Sequence[AliasEntry]) -> Optional[re.Pattern]:
    if not registry:
        return None
    names = sorted((entry.full_name for entry in registry), key=len, reverse=True)
    return re.compile("|".join(re.escape(name) for name in names), re.IGNORECASE)


def redact_with_regions(text: str, registry: Sequence[AliasEntry]) -> tuple[str, list[_Region]]:
    """Replace every registered name, returning the regions for span mapping.

    Longest names win at any position; matching is case-insensitive and a
    single left-to-right pass, which suffices because no replacement may
    contain a registered name.
    """
    pattern = _registry_pattern(registry)
    if pattern is None:
        return text, []
    replacements = {entry.full_name.lower(): entry.replacement for entry in registry}
    pieces: list[str] = []
    regions: list[_Region] = []
    cursor = 0
    out_length = 0
    for match in pattern.finditer(text):
        gap = text[cursor : match.start()]
        pieces.append(gap)
        out_length += len(gap)
        replacement = replacements[match.group(0).lower()]
        regions.append(
            _Region(match.start(), match.end(), out_length, out_length + len(replacement))
        )
        pieces.append(replacement)
        out_length += len(replacement)
        cursor = match.end()
    pieces.append(text[cursor:])
    return "".join(pieces), regions


def redact_text(text: str, registry: Sequence[AliasEntry]) -> str:
    """Replace every case-insensitive occurrence of each registered name."""
    return redact_with_regions(text, registry)[0]


def _map_point(regions: Sequence[_Region], pos: int, *, is_end: bool) -> int:
    delta = 0
    for region in regions:
        if pos <= region.old_start:
            break
        if pos >= region.old_end:
            delta += (region.new_end - region.new_start) - (region.old_end - region.old_start)
            continue
        # Strictly inside a replaced region: snap outward so the mapped
        # span covers the whole replacement and no partial name survives.
        return region.new_end if is_end else region.new_start
    return pos + delta


def map_span(regions: Sequence[_Region], start: int, end: int) -> tuple[int, int]:
    """Carry a [start, end) span through a redaction's replacements."""
    return _map_point(regions, start, is_end=False), _map_point(regions, end, is_end=True)


# ── Export planning ─────────────────────────────────────────────────


@dataclass(frozen=True)
class ExportPlan:
    """What a bundle export would withhold, and why."""

    excluded_activities: dict[str, str]
    excluded_artifacts: dict[str, str]
    dropped_threads: dict[str, str]
    withheld_counts: dict[str, int]


def _entry_survives(project: Project, entry: EvidenceEntry, plan_activities: dict, plan_artifacts: dict) -> bool:
    target = entry.target
    if target.granularity == GRANULARITY_NOTE:
        return True
    if target.activity_id in plan_activities or project.find_activity(target.activity_id) is None:
        return False
    if target.granularity == GRANULARITY_ACTIVITY:
        return True
    return target.artifact_id not in plan_artifacts and project.find_artifact(target.artifact_id) is not None


def plan_export(project: Project) -> ExportPlan:
    """Compute the redaction plan without touching the filesystem."""
    excluded_activities: dict[str, str] = {}
    excluded_artifacts: dict[str, str] = {}
    for activity in project.activities:
        if activity.private:
            excluded_activities[activity.id] = "private activity"
            for artifact in activity.artifacts:
                excluded_artifacts[artifact.id] = f"inside private activity {activity.id}"
            continue
        for artifact in activity.artifacts:
            if artifact.private:
                excluded_artifacts[artifact.id] = "private artifact"
            elif artifact.media_class != "text" and not artifact.cleared_for_export:
                excluded_artifacts[artifact.id] = "binary media not cleared for export"

    dropped_threads: dict[str, str] = {}
    withheld_counts: dict[str, int] = {}
    for thread in project.threads:
        surviving = sum(
            1 for entry in thread.evidence
            if _entry_survives(project, entry, excluded_activities, excluded_artifacts)
        )
        withheld_counts[thread.id] = len(thread.evidence) - surviving
        if thread.evidence and surviving == 0:
            dropped_threads[thread.id] = "all evidence withheld"
    return ExportPlan(excluded_activities, excluded_artifacts, dropped_threads, withheld_counts)


# ── Bundle export ───────────────────────────────────────────────────


@dataclass(frozen=True)
class BundleReport:
    """Counts of what the export included and withheld."""

    activities_included: int
    activities_excluded: int
    artifacts_included: int
    artifacts_excluded: int
    artifacts_redacted: int
    threads_dropped: int
    threads_trimmed: int
    reports_included: int


def _sha256_bytes(data: bytes) -> str:
    import hashlib

    return hashlib.sha256(data).hexdigest()


def _dump_json(doc: dict) -> bytes:
    return (json.dumps(doc, ensure_ascii=False, indent=2, sort_keys=True) + "\n").encode("utf-8")


def export_bundle(root: Path, project: Project, out_dir: Path, *, force: bool = False) -> BundleReport:
    """Write the redacted, self-contained bundle for ``project``.

    The source repository must validate clean (``force`` overrides) and the
    output directory must be empty or absent.  Output is deterministic for
    a given project state; no wall-clock value enters the bundle.
    """
    root = Path(root)
    out = Path(out_dir)
    blocking = [v for v in validate_project(project, root) if v.rule != "orphan-file"]
    if blocking and not force:
        raise RejectionError(
            "refusing to export a project with violations:\n" + "\n".join(f"  - {v}" for v in blocking)
        )
    if out.exists() and any(out.iterdir()):
        raise RejectionError(f"output directory {out} is not empty")
    (out / FILES_DIR).mkdir(parents=True, exist_ok=True)
    (out / REPORTS_DIR).mkdir(parents=True, exist_ok=True)

    registry = project.alias_registry
    plan = plan_export(project)

    def redact(value: str) -> str:
        return redact_text(value, registry)

    def redact_tags(labels: Iterable[str]) -> tuple[str, ...]:
        return tuple(sorted({redact(label) for label in labels}))

    # Copy artifact bytes, redacting text media; remember replacement
    # regions so fragment anchors can be carried through.
    regions_by_artifact: dict[str, list[_Region]] = {}
    redacted_text_by_artifact: dict[str, str] = {}
    artifacts_redacted = 0
    bundle_activities: list[Activity] = []
    for activity in sorted(project.activities, key=lambda a: a.id):
        if activity.id in plan.excluded_activities:
            continue
        kept: list[Artifact] = []
        for artifact in activity.artifacts:
            if artifact.id in plan.excluded_artifacts:
                continue
            source = root / artifact.file_ref
            destination = out / artifact.file_ref
            if artifact.media_class == "text":
                text = source.read_text(encoding="utf-8")
                redacted, regions = redact_with_regions(text, registry)
                data = redacted.encode("utf-8")
                destination.write_bytes(data)
                regions_by_artifact[artifact.id] = regions
                redacted_text_by_artifact[artifact.id] = redacted
                checksum = _sha256_bytes(data)
                if regions:
                    artifacts_redacted += 1
            else:
                shutil.copyfile(source, destination)
                checksum = artifact.checksum
            kept.append(
                replace(
                    artifact,
                    kind=redact(artifact.kind),
                    description=redact(artifact.description),
                    tags=redact_tags(artifact.tags),
                    checksum=checksum,
                )
            )
        bundle_activities.append(
            replace(
                activity,
                title=redact(activity.title),
                tags=redact_tags(activity.tags),
                artifacts=tuple(kept),
            )
        )

    # Threads: keep surviving evidence, remap fragment anchors into the
    # redacted text, scrub lineage pointers at dropped threads.
    bundle_threads: list[Thread] = []
    threads_trimmed = 0
    for thread in sorted(project.threads, key=lambda t: t.id):
        if thread.id in plan.dropped_threads:
            continue
        surviving: list[EvidenceEntry] = []
        for entry in thread.evidence:
            if not _entry_survives(project, entry, plan.excluded_activities, plan.excluded_artifacts):
                continue
            target = entry.target
            if target.fragment is not None:
                regions = regions_by_artifact.get(target.artifact_id, [])
                new_start, new_end = map_span(regions, target.fragment.start, target.fragment.end)
                text = redacted_text_by_artifact.get(target.artifact_id, "")
                target = replace(
                    target,
                    fragment=Fragment(new_start, new_end, text[new_start:new_end]),
                )
            surviving.append(replace(entry, target=target, rationale=redact(entry.rationale)))
        if plan.withheld_counts.get(thread.id, 0) > 0:
            threads_trimmed += 1
        merged_from = tuple(mid for mid in thread.merged_from if mid not in plan.dropped_threads)
        branched_from = thread.branched_from if thread.branched_from not in plan.dropped_threads else None
        bundle_threads.append(
            replace(
                thread,
                name=redact(thread.name),
                description=redact(thread.description),
                evidence=tuple(surviving),
                merged_from=merged_from,
                branched_from=branched_from,
            )
        )

    vocabulary: list[Tag] = []
    seen_labels: set[str] = set()
    for tag in sorted(project.tag_vocabulary, key=lambda t: (t.label.lower(), t.label)):
        label = redact(tag.label)
        if label.lower() in seen_labels:
            continue
        seen_labels.add(label.lower())
        vocabulary.append(Tag(label, redact(tag.note)))

    bundle_project = Project(
        name=project.name,
        title=redact(project.title),
        created_at=project.created_at,
        activities=tuple(bundle_activities),
        threads=tuple(bundle_threads),
        tag_vocabulary=tuple(sorted(vocabulary, key=lambda t: (t.label.lower(), t.label))),
        kind_vocabulary=project.kind_vocabulary,
        reports=tuple(replace(r, title=redact(r.title)) for r in project.reports),
    )

    # Reports: redact the manuscript text, then index it against the
    # bundled state so every placed citation resolves inside the bundle.
    from .reports import index_text, index_to_dict

    reports_included = 0
    for report in sorted(bundle_project.reports, key=lambda r: r.id):
        source = root / report.path
        if not source.is_file():
            continue
        redacted = redact_text(source.read_text(encoding="utf-8"), registry)
        (out / report.path).write_bytes(redacted.encode("utf-8"))
        index = index_text(bundle_project, report.id, redacted)
        index_path = out / REPORTS_DIR / f"{report.id}.index.json"
        index_path.write_bytes(_dump_json(index_to_dict(index)))
        reports_included += 1

    # bundle.json: the redacted manifest plus the chronological index and
    # per-thread withheld counts.  Private flags never appear.
    activity_docs = []
    for activity in bundle_activities:
        doc = activity_to_dict(activity)
        doc.pop("private")
        for artifact_doc in doc["artifacts"]:
            artifact_doc.pop("private")
            artifact_doc.pop("cleared_for_export")
        activity_docs.append(doc)
    thread_docs = []
    for thread in bundle_threads:
        doc = thread_to_dict(thread)
        doc["withheld_count"] = plan.withheld_counts.get(thread.id, 0)
        thread_docs.append(doc)

    bundle_doc = {
        "schema_version": BUNDLE_SCHEMA_VERSION,
        "name": bundle_project.name,
        "title": bundle_project.title,
        "created_at": format_timestamp(bundle_project.created_at),
        "activities": activity_docs,
        "activity_index": [
            a.id
            for a in sorted(bundle_activities, key=lambda a: (a.occurred_at, a.id))
        ],
        "threads": thread_docs,
        "tag_vocabulary": [{"label": t.label, "note": t.note} for t in bundle_project.tag_vocabulary],
        "reports": [
            {"id": r.id, "path": r.path, "title": r.title}
            for r in sorted(bundle_project.reports, key=lambda r: r.id)
        ],
    }
    (out / BUNDLE_MANIFEST).write_bytes(_dump_json(bundle_doc))

    _write_checksums(out)

    total_artifacts = sum(len(a.artifacts) for a in project.activities)
    included_artifacts = sum(len(a.artifacts) for a in bundle_activities)
    return BundleReport(
        activities_included=len(bundle_activities),
        activities_excluded=len(plan.excluded_activities),
        artifacts_included=included_artifacts,
        artifacts_excluded=total_artifacts - included_artifacts,
        artifacts_redacted=artifacts_redacted,
        threads_dropped=len(plan.dropped_threads),
        threads_trimmed=threads_trimmed,
        reports_included=reports_included,
    )


def _bundle_files(out: Path) -> list[Path]:
    found = [p for p in out.rglob("*") if p.is_file() and p.name != CHECKSUMS_NAME]
    return sorted(found, key=lambda p: p.relative_to(out).as_posix())


def _write_checksums(out: Path) -> None:
    lines = [
        f"{sha256_file(path)}  {path.relative_to(out).as_posix()}"
        for path in _bundle_files(out)
    ]
    (out / CHECKSUMS_NAME).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ── Bundle verification ─────────────────────────────────────────────


def _iter_annotation_strings(node, parent_key: str = ""):
    """Yield (path, value) for every annotation string in a JSON document,
    skipping values under structural keys."""
    if isinstance(node, dict):
        for key, value in node.items():
            if key in STRUCTURAL_KEYS:
                continue
            yield from _iter_annotation_strings(value, key)
    elif isinstance(node, list):
        for item in node:
            yield from _iter_annotation_strings(item, parent_key)
    elif isinstance(node, str):
        yield parent_key, node


def verify_bundle(bundle_dir: Path, known_names: Sequence[str] = ()) -> tuple[bool, list[Violation]]:
    """Audit a bundle from its files alone; violations are data.

    Re-checks checksums, reference closure, fragment anchors, and privacy
    flags.  The name-leak scan needs the registered names, which a bundle
    deliberately does not carry; pass ``known_names`` (the CLI supplies
    them from the source repository when one is at hand) to enable it.
    """
    out = Path(bundle_dir)
    if not out.is_dir():
        raise RejectionError(f"{bundle_dir} is not a directory")
    violations: list[Violation] = []

    def flag(entity_id: str, rule: str, message: str) -> None:
        violations.append(Violation(entity_id, rule, message))

    checksums_path = out / CHECKSUMS_NAME
    listed: dict[str, str] = {}
    if not checksums_path.is_file():
        flag(CHECKSUMS_NAME, "missing-file", "checksums.txt missing from bundle")
    else:
        for line_number, line in enumerate(checksums_path.read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            parts = line.split("  ", 1)
            if len(parts) != 2:
                flag(CHECKSUMS_NAME, "bad-checksums", f"checksums.txt line {line_number}: unparseable")
                continue
            listed[parts[1]] = parts[0]
        for rel, expected in sorted(listed.items()):
            target = out / rel
            if not target.is_file():
                flag(rel, "missing-file", f"{rel}: listed in checksums.txt but missing")
            elif sha256_file(target) != expected:
                flag(rel, "checksum-mismatch", f"{rel}: contents do not match recorded checksum")
        for path in _bundle_files(out):
            rel = path.relative_to(out).as_posix()
            if rel not in listed:
                flag(rel, "unlisted-file", f"{rel}: present but not covered by checksums.txt")

    manifest_path = out / BUNDLE_MANIFEST
    if not manifest_path.is_file():
        flag(BUNDLE_MANIFEST, "missing-file", "bundle.json missing")
        return False, sorted(violations, key=lambda v: (v.entity_id, v.rule, v.message))
    try:
        doc = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        flag(BUNDLE_MANIFEST, "bad-bundle", f"bundle.json unparseable: {exc}")
        return False, sorted(violations, key=lambda v: (v.entity_id, v.rule, v.message))

    if doc.get("schema_version") != BUNDLE_SCHEMA_VERSION:
        flag(BUNDLE_MANIFEST, "bad-bundle", f"unsupported schema_version {doc.get('schema_version')!r}")

    _check_privacy_flags(doc, flag)

    activity_ids = {a.get("id") for a in doc.get("activities", [])}
    artifact_ids = {
        f.get("id") for a in doc.get("activities", []) for f in a.get("artifacts", [])
    }
    thread_ids = {t.get("id") for t in doc.get("threads", [])}

    for value in doc.get("activity_index", []):
        if value not in activity_ids:
            flag(str(value), "dangling-reference", f"activity_index names unknown activity {value}")
    if set(doc.get("activity_index", [])) != activity_ids:
        flag("activity_index", "bad-bundle", "activity_index does not cover exactly the bundled activities")

    for activity in doc.get("activities", []):
        for artifact in activity.get("artifacts", []):
            ref = artifact.get("file_ref", "")
            if not (out / ref).is_file():
                flag(artifact.get("id", "?"), "dangling-reference", f"artifact file {ref!r} missing from bundle")

    for thread in doc.get("threads", []):
        tid = thread.get("id", "?")
        for mid in thread.get("merged_from", []):
            if mid not in thread_ids:
                flag(tid, "dangling-reference", f"thread {tid}: merged_from {mid} not in bundle")
        branched = thread.get("branched_from")
        if branched is not None and branched not in thread_ids:
            flag(tid, "dangling-reference", f"thread {tid}: branched_from {branched} not in bundle")
        if not isinstance(thread.get("withheld_count"), int) or thread.get("withheld_count", 0) < 0:
            flag(tid, "bad-bundle", f"thread {tid}: missing or negative withheld_count")
        for position, entry in enumerate(thread.get("evidence", [])):
            target = entry.get("target", {})
            granularity = target.get("granularity")
            if granularity == "note":
                continue
            aid = target.get("activity_id")
            if aid not in activity_ids:
                flag(tid, "dangling-reference", f"thread {tid} evidence[{position}]: activity {aid} not in bundle")
                continue
            if granularity in ("artifact", "fragment"):
                fid = target.get("artifact_id")
                if fid not in artifact_ids:
                    flag(tid, "dangling-reference", f"thread {tid} evidence[{position}]: artifact {fid} not in bundle")
                    continue
            if granularity == "fragment":
                _check_fragment(out, doc, tid, position, target, flag)

    _check_report_indexes(out, doc, activity_ids, artifact_ids, thread_ids, flag)

    if known_names:
        _scan_for_leaks(out, doc, known_names, flag)

    violations.sort(key=lambda v: (v.entity_id, v.rule, v.message))
    return (not violations), violations


def _check_privacy_flags(node, flag, path: str = "bundle.json") -> None:
    if isinstance(node, dict):
        if node.get("private") is True:
            flag(node.get("id", path), "private-flag", f"{node.get('id', path)}: private entity present in bundle")
        for value in node.values():
            _check_privacy_flags(value, flag, path)
    elif isinstance(node, list):
        for item in node:
            _check_privacy_flags(item, flag, path)


def _check_fragment(out: Path, doc: dict, tid: str, position: int, target: dict, flag) -> None:
    fragment = target.get("fragment") or {}
    artifact_id = target.get("artifact_id")
    file_ref = next(
        (
            f.get("file_ref")
            for a in doc.get("activities", [])
            for f in a.get("artifacts", [])
            if f.get("id") == artifact_id
        ),
        None,
    )
    if file_ref is None or not (out / file_ref).is_file():
        return  # already flagged as dangling
    text = (out / file_ref).read_text(encoding="utf-8")
    start, end = fragment.get("start", -1), fragment.get("end", -1)
    if not (0 <= start < end <= len(text)) or text[start:end] != fragment.get("quoted_text"):
        flag(tid, "fragment-drift", f"thread {tid} evidence[{position}]: fragment does not match bundled text")


def _check_report_indexes(out, doc, activity_ids, artifact_ids, thread_ids, flag) -> None:
    by_granularity = {"activity": activity_ids, "artifact": artifact_ids, "thread": thread_ids}
    for report in doc.get("reports", []):
        rid = report.get("id", "?")
        if not (out / report.get("path", "")).is_file():
            flag(rid, "dangling-reference", f"report {rid}: file {report.get('path')!r} missing from bundle")
        index_path = out / REPORTS_DIR / f"{rid}.index.json"
        if not index_path.is_file():
            flag(rid, "missing-index", f"report {rid}: index file missing from bundle")
            continue
        try:
            index_doc = json.loads(index_path.read_text(encoding="utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            flag(rid, "bad-index", f"report {rid}: index unparseable: {exc}")
            continue
        for section in index_doc.get("sections", []):
            for item in section.get("citations", []):
                citation = item.get("citation", {})
                granularity = citation.get("granularity")
                cited = citation.get("id")
                if citation.get("project") != doc.get("name"):
                    flag(rid, "dangling-reference", f"report {rid}: citation names foreign project {citation.get('project')!r}")
                elif cited not in by_granularity.get(granularity, set()):
                    flag(rid, "dangling-reference", f"report {rid}: cited {granularity} {cited} not in bundle")


def _scan_for_leaks(out: Path, doc: dict, known_names: Sequence[str], flag) -> None:
    lowered = [(name, name.lower()) for name in known_names if name.strip()]

    def scan_string(where: str, value: str) -> None:
        value_lower = value.lower()
        for name, needle in lowered:
            if needle in value_lower:
                flag(where, "name-leak", f"{where}: registered name {name!r} appears in bundle")

    for key, value in _iter_annotation_strings(doc):
        scan_string(f"bundle.json:{key}", value)

    for path in _bundle_files(out):
        rel = path.relative_to(out).as_posix()
        if rel == BUNDLE_MANIFEST:
            continue
        extension = path.suffix.lstrip(".").lower()
        if extension not in TEXT_EXTENSIONS:
            continue
        if rel.endswith(".index.json"):
            try:
                index_doc = json.loads(path.read_text(encoding="utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError):
                continue
            for key, value in _iter_annotation_strings(index_doc):
                scan_string(f"{rel}:{key}", value)
            continue
        scan_string(rel, path.read_text(encoding="utf-8"))
