"""Plain-file repository: one directory, one JSON manifest, copied bytes.

Layout::

    <root>/
      trace.json    manifest: the full project except artifact bytes
      files/        artifact bytes, named <artifact-id>.<ext>, never rewritten
      reports/      ingested manuscripts
      .trace.lock   advisory single-writer lock (present only while held)

The manifest is deterministic (sorted keys, entities ordered by id, LF,
two-space indent) so repositories diff cleanly under version control, and
it is replaced atomically: a temp file in the same directory is renamed
over the old manifest, so readers observe either the complete old or the
complete new state, never a torn one.
"""

from __future__ import annotations

import json
import os
import shutil
import socket
from contextlib import contextmanager
from datetime import datetime
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, NamedTuple, Optional

from .errors import LockHeldError, ManifestError, NotFoundError, RejectionError
from .ids import IdFactory, new_id
from .model import (
    Activity,
    AliasEntry,
    Artifact,
    EXTENSION_MEDIA_CLASS,
    EvidenceEntry,
    EvidenceTarget,
    Fragment,
    PROJECT_NAME_PATTERN,
    Project,
    ReportRef,
    Tag,
    Thread,
    Violation,
    ensure_kind,
    format_timestamp,
    normalize_tags,
    normalize_timestamp,
    now_utc,
    parse_timestamp,
    sha256_file,
    validate_project,
)

MANIFEST_NAME = "trace.json"
FILES_DIR = "files"
REPORTS_DIR = "reports"
LOCK_NAME = ".trace.lock"
SCHEMA_VERSION = 1

# Named interruption points for crash-safety testing; a fault hook may raise
# at any of them to model a crash at that boundary.
SAVE_STAGES = ("pre-temp", "post-temp", "mid-rename", "post-rename")
FaultHook = Callable[[str], None]


@dataclass(frozen=True)
class RepositoryLayout:
    root: Path

    @property
    def manifest_path(self) -> Path:
        return self.root / MANIFEST_NAME

    @property
    def files_dir(self) -> Path:
        return self.root / FILES_DIR

    @property
    def reports_dir(self) -> Path:
        return self.root / REPORTS_DIR

    @property
    def lock_path(self) -> Path:
        return self.root / LOCK_NAME


class LoadResult(NamedTuple):
    """A loaded project plus the integrity findings from re-verification."""

    project: Project
    violations: list[Violation]


def find_repo_root(start: Path) -> Optional[Path]:
    """Walk upward from ``start`` to the nearest directory holding a manifest."""
    current = start.resolve()
    for candidate in (current, *current.parents):
        if (candidate / MANIFEST_NAME).is_file():
            return candidate
    return None


# ── Locking ─────────────────────────────────────────────────────────


@contextmanager
def repo_lock(root: Path):
    """Advisory single-writer lock; held for the duration of a mutation.

    Concurrent writers fail fast with :class:`LockHeldError` carrying the
    holder's metadata.  Reads never take the lock.
    """
    layout = RepositoryLayout(root)
    metadata = {
        "pid": os.getpid(),
        "host": socket.gethostname(),
        "acquired_at": format_timestamp(now_utc()),
    }
    try:
        fd = os.open(layout.lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        holder = {}
        try:
            holder = json.loads(layout.lock_path.read_text(encoding="utf-8"))
        except (OSError, ValueError):
            pass
        raise LockHeldError(
            f"repository {root} is locked by another writer (pid {holder.get('pid', '?')})",
            holder=holder,
        ) from None
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            json.dump(metadata, handle)
        yield
    finally:
        try:
            layout.lock_path.unlink()
        except FileNotFoundError:
            pass


# ── Manifest serialization ──────────────────────────────────────────


def _fragment_to_dict(fragment: Fragment) -> dict:
    return {"start": fragment.start, "end": fragment.end, "quoted_text": fragment.quoted_text}


def target_to_dict(target: EvidenceTarget) -> dict:
    doc: dict = {"granularity": target.granularity}
    if target.activity_id:
        doc["activity_id"] = target.activity_id
    if target.artifact_id:
        doc["artifact_id"] = target.artifact_id
    if target.fragment is not None:
        doc["fragment"] = _fragment_to_dict(target.fragment)
    return doc


def entry_to_dict(entry: EvidenceEntry) -> dict:
    return {
        "target": target_to_dict(entry.target),
        "rationale": entry.rationale,
        "added_at": format_timestamp(entry.added_at),
        "timing": entry.timing,
    }


def artifact_to_dict(artifact: Artifact) -> dict:
    return {
        "id": artifact.id,
        "kind": artifact.kind,
        "description": artifact.description,
        "file_ref": artifact.file_ref,
        "media_class": artifact.media_class,
        "checksum": artifact.checksum,
        "tags": list(artifact.tags),
        "private": artifact.private,
        "cleared_for_export": artifact.cleared_for_export,
    }


def activity_to_dict(activity: Activity) -> dict:
    return {
        "id": activity.id,
        "title": activity.title,
        "occurred_at": format_timestamp(activity.occurred_at),
        "recorded_at": format_timestamp(activity.recorded_at),
        "tags": list(activity.tags),
        "private": activity.private,
        "artifacts": [artifact_to_dict(a) for a in activity.artifacts],
    }


def thread_to_dict(thread: Thread) -> dict:
    return {
        "id": thread.id,
        "name": thread.name,
        "description": thread.description,
        "created_at": format_timestamp(thread.created_at),
        "status": thread.status,
        "evidence": [entry_to_dict(e) for e in thread.evidence],
        "merged_from": sorted(thread.merged_from),
        "branched_from": thread.branched_from,
    }


def project_to_manifest(project: Project) -> dict:
    """Serialize a project to the manifest document (no artifact bytes)."""
    return {
        "schema_version": SCHEMA_VERSION,
        "name": project.name,
        "title": project.title,
        "created_at": format_timestamp(project.created_at),
        "activities": [activity_to_dict(a) for a in sorted(project.activities, key=lambda a: a.id)],
        "threads": [thread_to_dict(t) for t in sorted(project.threads, key=lambda t: t.id)],
        "tag_vocabulary": [
            {"label": tag.label, "note": tag.note}
            for tag in sorted(project.tag_vocabulary, key=lambda t: (t.label.lower(), t.label))
        ],
        "kind_vocabulary": sorted(project.kind_vocabulary),
        "alias_registry": [
            {"full_name": alias.full_name, "replacement": alias.replacement}
            for alias in sorted(project.alias_registry, key=lambda a: a.full_name)
        ],
        "reports": [
            {"id": report.id, "path": report.path, "title": report.title}
            for report in sorted(project.reports, key=lambda r: r.id)
        ],
    }


def manifest_bytes(project: Project) -> bytes:
    text = json.dumps(project_to_manifest(project), ensure_ascii=False, indent=2, sort_keys=True)
    return (text + "\n").encode("utf-8")


def _target_from_dict(doc: dict) -> EvidenceTarget:
    fragment = None
    if doc.get("fragment") is not None:
        f = doc["fragment"]
        fragment = Fragment(start=int(f["start"]), end=int(f["end"]), quoted_text=f["quoted_text"])
    return EvidenceTarget(
        granularity=doc["granularity"],
        activity_id=doc.get("activity_id", ""),
        artifact_id=doc.get("artifact_id", ""),
        fragment=fragment,
    )


def manifest_to_project(doc: dict, source: str = "manifest") -> Project:
    """Rebuild a project from a manifest document; names ``source`` in errors."""
    try:
        version = doc["schema_version"]
        if version != SCHEMA_VERSION:
            raise ManifestError(f"{source}: unsupported schema_version {version!r}")
        activities = tuple(
            Activity(
                id=a["id"],
                title=a["title"],
                occurred_at=parse_timestamp(a["occurred_at"]),
                recorded_at=parse_timestamp(a["recorded_at"]),
                tags=tuple(a.get("tags", [])),
                private=bool(a.get("private", False)),
                artifacts=tuple(
                    Artifact(
                        id=f["id"],
                        kind=f["kind"],
                        description=f["description"],
                        file_ref=f["file_ref"],
                        media_class=f["media_class"],
                        checksum=f["checksum"],
                        tags=tuple(f.get("tags", [])),
                        private=bool(f.get("private", False)),
                        cleared_for_export=bool(f.get("cleared_for_export", False)),
                    )
                    for f in a.get("artifacts", [])
                ),
            )
            for a in doc.get("activities", [])
        )
        threads = tuple(
            Thread(
                id=t["id"],
                name=t["name"],
                description=t["description"],
                created_at=parse_timestamp(t["created_at"]),
                status=t["status"],
                evidence=tuple(
                    EvidenceEntry(
                        target=_target_from_dict(e["target"]),
                        rationale=e["rationale"],
                        added_at=parse_timestamp(e["added_at"]),
                        timing=e["timing"],
                    )
                    for e in t.get("evidence", [])
                ),
                merged_from=tuple(t.get("merged_from", [])),
                branched_from=t.get("branched_from"),
            )
            for t in doc.get("threads", [])
        )
        return Project(
            name=doc["name"],
            title=doc["title"],
            created_at=parse_timestamp(doc["created_at"]),
            activities=activities,
            threads=threads,
            tag_vocabulary=tuple(Tag(t["label"], t.get("note", "")) for t in doc.get("tag_vocabulary", [])),
            kind_vocabulary=tuple(doc.get("kind_vocabulary", [])),
            alias_registry=tuple(
                AliasEntry(a["full_name"], a["replacement"]) for a in doc.get("alias_registry", [])
            ),
            reports=tuple(ReportRef(r["id"], r["path"], r["title"]) for r in doc.get("reports", [])),
        )
    except (KeyError, TypeError) as exc:
        raise ManifestError(f"{source}: malformed manifest ({exc!r})") from exc


# ── Repository operations ───────────────────────────────────────────


def init_repo(root: Path, project_name: str, title: str, *, now: Optional[datetime] = None) -> Project:
    """Create a fresh repository skeleton; refuses to clobber anything.

    ``root`` must be empty or nonexistent.  Returns the new (clean) project.
    """
    root = Path(root)
    if root.exists() and any(root.iterdir()):
        raise RejectionError(f"refusing to initialize {root}: directory is not empty")
    if not project_name or not PROJECT_NAME_PATTERN.match(project_name):
        raise RejectionError(
            f"project name {project_name!r} must be lowercase letters, digits, and hyphens"
        )
    layout = RepositoryLayout(root)
    layout.files_dir.mkdir(parents=True, exist_ok=True)
    layout.reports_dir.mkdir(parents=True, exist_ok=True)
    created = normalize_timestamp(now) if now is not None else now_utc()
    project = Project(name=project_name, title=title, created_at=created)
    layout.manifest_path.write_bytes(manifest_bytes(project))
    return project


def load_project(root: Path) -> LoadResult:
    """Load and re-verify a repository.

    A missing or unparseable manifest is a hard error naming the file and
    parse position.  Integrity problems (checksum mismatches, fragment
    drift, any other rule) do not fail the load; they are returned as
    violations on the result.
    """
    root = Path(root)
    layout = RepositoryLayout(root)
    if not layout.manifest_path.is_file():
        raise ManifestError(f"{layout.manifest_path}: manifest not found")
    raw = layout.manifest_path.read_bytes()
    try:
        doc = json.loads(raw.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise ManifestError(f"{layout.manifest_path}: not valid UTF-8 ({exc.reason} at byte {exc.start})") from None
    except json.JSONDecodeError as exc:
        raise ManifestError(
            f"{layout.manifest_path}: invalid JSON at line {exc.lineno}, column {exc.colno} (char {exc.pos})"
        ) from None
    project = manifest_to_project(doc, source=str(layout.manifest_path))
    return LoadResult(project, validate_project(project, root))


def save_project(
    root: Path,
    project: Project,
    *,
    allow_violations: bool = False,
    fault_hook: Optional[FaultHook] = None,
) -> None:
    """Atomically replace the manifest with ``project``.

    Refuses to persist a project that does not validate clean (pass
    ``allow_violations=True`` to force).  The write goes to a temp file in
    the manifest's directory followed by an atomic rename, so a crash at
    any interruption point leaves either the old or the new manifest.
    """
    root = Path(root)
    layout = RepositoryLayout(root)
    if not layout.root.is_dir():
        raise RejectionError(f"{root} is not a repository directory")
    if not allow_violations:
        # Orphan files are repository hygiene, not project-state defects;
        # they must not wedge the repository after an interrupted ingest.
        blocking = [v for v in validate_project(project, root) if v.rule != "orphan-file"]
        if blocking:
            raise RejectionError(
                "refusing to save a project with violations:\n"
                + "\n".join(f"  - {v}" for v in blocking)
            )

    hook = fault_hook or (lambda stage: None)
    with repo_lock(root):
        hook("pre-temp")
        data = manifest_bytes(project)
        temp_path = layout.manifest_path.with_name(f"{MANIFEST_NAME}.tmp.{os.getpid()}")
        try:
            with open(temp_path, "wb") as handle:
                handle.write(data)
                handle.flush()
                os.fsync(handle.fileno())
            hook("post-temp")
            hook("mid-rename")
            os.replace(temp_path, layout.manifest_path)
        except BaseException:
            try:
                temp_path.unlink()
            except FileNotFoundError:
                pass
            raise
        _fsync_dir(layout.root)
        hook("post-rename")


def ingest_artifact(
    root: Path,
    project: Project,
    activity_id: str,
    source_file: Path,
    kind: str,
    description: str,
    tags: Iterable[str] = (),
    *,
    private: bool = False,
    cleared_for_export: bool = False,
    id_factory: IdFactory = new_id,
) -> tuple[Project, str]:
    """Copy a file into the store and record it as an artifact.

    The mandatory-annotation rule is enforced here: empty kind or
    description rejects the ingest outright.  The copied bytes are content
    hashed and never rewritten afterwards; re-ingesting the same file
    yields a distinct artifact with an equal checksum.
    """
    root = Path(root)
    source_file = Path(source_file)
    layout = RepositoryLayout(root)

    if not kind.strip():
        raise RejectionError("kind required: every artifact carries a type")
    if not description.strip():
        raise RejectionError("description required: every artifact carries a brief description")
    activity = project.find_activity(activity_id)
    if activity is None:
        raise NotFoundError(f"no activity with id {activity_id}")
    if not source_file.is_file():
        raise RejectionError(f"source file {source_file} not readable")

    extension = source_file.suffix.lstrip(".").lower()
    media_class = EXTENSION_MEDIA_CLASS.get(extension)
    if media_class is None:
        allowed = ", ".join(sorted(EXTENSION_MEDIA_CLASS))
        raise RejectionError(f"extension {extension or '(none)'!r} not allowed; use one of: {allowed}")

    project, kind = ensure_kind(project, kind)
    project, tag_labels = normalize_tags(project, tags)

    artifact_id = id_factory()
    layout.files_dir.mkdir(parents=True, exist_ok=True)
    destination = layout.files_dir / f"{artifact_id}.{extension}"
    shutil.copyfile(source_file, destination)

    artifact = Artifact(
        id=artifact_id,
        kind=kind,
        description=description,
        file_ref=f"{FILES_DIR}/{artifact_id}.{extension}",
        media_class=media_class,
        checksum=sha256_file(destination),
        tags=tag_labels,
        private=private,
        cleared_for_export=cleared_for_export,
    )
    activity = project.find_activity(activity_id)
    assert activity is not None
    updated = project.replace_activity(
        Activity(
            id=activity.id,
            title=activity.title,
            occurred_at=activity.occurred_at,
            recorded_at=activity.recorded_at,
            tags=activity.tags,
            private=activity.private,
            artifacts=activity.artifacts + (artifact,),
        )
    )
    return updated, artifact_id


def read_artifact_text(root: Path, project: Project, artifact_id: str) -> str:
    """Decode a text artifact's stored bytes."""
    found = project.find_artifact(artifact_id)
    if found is None:
        raise NotFoundError(f"no artifact with id {artifact_id}")
    _, artifact = found
    if artifact.media_class != "text":
        raise RejectionError(f"artifact {artifact_id} is {artifact.media_class}, not text")
    path = Path(root) / artifact.file_ref
    if not path.is_file():
        raise RejectionError(f"artifact file {artifact.file_ref} missing from the store")
    return path.read_text(encoding="utf-8")


def _fsync_dir(path: Path) -> None:
    try:
        fd = os.open(path, os.O_RDONLY)
    except OSError:
        return
    try:
        os.fsync(fd)
    except OSError:
        pass
    finally:
        os.close(fd)
