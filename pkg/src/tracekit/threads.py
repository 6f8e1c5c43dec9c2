"""Thread lifecycle: create, grow, merge, branch, close, and seed threads.

All operations are pure functions from project state to project state;
persistence and locking stay in :mod:`tracekit.store`.  Threads are
append-only apart from explicit removal, and closed threads (dead ends,
merged-away shells) reject every mutation.
"""

from __future__ import annotations

from dataclasses import replace
from datetime import datetime
from pathlib import Path
from typing import Optional

from .errors import NotFoundError, RejectionError
from .ids import IdFactory, new_id
from .model import (
    EvidenceEntry,
    EvidenceTarget,
    Fragment,
    GRANULARITY_ACTIVITY,
    GRANULARITY_ARTIFACT,
    GRANULARITY_FRAGMENT,
    GRANULARITY_NOTE,
    Project,
    THREAD_ACTIVE,
    THREAD_DEAD_END,
    THREAD_MERGED_AWAY,
    Thread,
    TIMING_FORWARD,
    classify_timing,
    normalize_timestamp,
    now_utc,
)
from .store import read_artifact_text


def _stamp(now: Optional[datetime]) -> datetime:
    return normalize_timestamp(now) if now is not None else now_utc()


def _active_thread(project: Project, thread_id: str) -> Thread:
    thread = project.find_thread(thread_id)
    if thread is None:
        raise NotFoundError(f"no thread with id {thread_id}")
    if thread.status != THREAD_ACTIVE:
        raise RejectionError(f"thread {thread_id} is {thread.status} and read-only")
    return thread


def create_thread(
    project: Project,
    name: str,
    description: str,
    *,
    now: Optional[datetime] = None,
    id_factory: IdFactory = new_id,
) -> tuple[Project, str]:
    """Open a new active thread.  Name and description are mandatory."""
    if not name.strip():
        raise RejectionError("thread name required")
    if not description.strip():
        raise RejectionError("thread description required")
    thread = Thread(
        id=id_factory(),
        name=name,
        description=description,
        created_at=_stamp(now),
    )
    return project.with_thread(thread), thread.id


def _resolve_target(project: Project, target: EvidenceTarget) -> Optional[datetime]:
    """Check a target resolves; return the occurred_at used for timing."""
    granularity = target.granularity
    if granularity == GRANULARITY_NOTE:
        if target.activity_id or target.artifact_id or target.fragment is not None:
            raise RejectionError("note entries carry no target ids")
        return None
    if granularity not in (GRANULARITY_ACTIVITY, GRANULARITY_ARTIFACT, GRANULARITY_FRAGMENT):
        raise RejectionError(f"unknown evidence granularity {granularity!r}")
    activity = project.find_activity(target.activity_id)
    if activity is None:
        raise NotFoundError(f"no activity with id {target.activity_id or '(missing)'}")
    if granularity == GRANULARITY_ACTIVITY:
        if target.artifact_id or target.fragment is not None:
            raise RejectionError("activity-level evidence carries no artifact id or fragment")
        return activity.occurred_at
    artifact = next((a for a in activity.artifacts if a.id == target.artifact_id), None)
    if artifact is None:
        raise NotFoundError(
            f"no artifact {target.artifact_id or '(missing)'} in activity {target.activity_id}"
        )
    if granularity == GRANULARITY_ARTIFACT and target.fragment is not None:
        raise RejectionError("artifact-level evidence carries no fragment")
    if granularity == GRANULARITY_FRAGMENT:
        fragment = target.fragment
        if fragment is None:
            raise RejectionError("fragment evidence requires a fragment")
        if artifact.media_class != "text":
            raise RejectionError(f"artifact {artifact.id} is {artifact.media_class}; fragments need text")
        if not (0 <= fragment.start < fragment.end):
            raise RejectionError(f"fragment span [{fragment.start}, {fragment.end}) is empty or negative")
    return activity.occurred_at


def add_evidence(
    project: Project,
    thread_id: str,
    target: EvidenceTarget,
    rationale: str,
    *,
    now: Optional[datetime] = None,
) -> Project:
    """Append evidence to an active thread.

    A rationale is required whenever evidence is added; the entry's timing
    is derived here (retroactive iff the target activity predates the
    thread) and stored for display.
    """
    if not rationale.strip():
        raise RejectionError("rationale required: evidence is only added with a brief rationale")
    thread = _active_thread(project, thread_id)
    occurred_at = _resolve_target(project, target)
    timing = TIMING_FORWARD if occurred_at is None else classify_timing(occurred_at, thread.created_at)
    entry = EvidenceEntry(target=target, rationale=rationale, added_at=_stamp(now), timing=timing)
    return project.replace_thread(replace(thread, evidence=thread.evidence + (entry,)))


def remove_evidence(project: Project, thread_id: str, index: int) -> Project:
    """Drop one entry by position; the rest keep their order."""
    thread = _active_thread(project, thread_id)
    if not (0 <= index < len(thread.evidence)):
        raise RejectionError(f"evidence index {index} out of range (thread has {len(thread.evidence)} entries)")
    evidence = thread.evidence[:index] + thread.evidence[index + 1 :]
    return project.replace_thread(replace(thread, evidence=evidence))


def extract_fragment(root: Path, project: Project, artifact_id: str, start: int, end: int) -> Fragment:
    """Cut a span out of a text artifact, capturing the verbatim excerpt."""
    text = read_artifact_text(root, project, artifact_id)
    if not (0 <= start < end <= len(text)):
        raise RejectionError(
            f"offsets [{start}, {end}) invalid for a text of length {len(text)} (need 0 <= start < end <= length)"
        )
    return Fragment(start=start, end=end, quoted_text=text[start:end])


MERGE_PREFIX_TEMPLATE = '[merged from "{name}"] '


def merge_threads(
    project: Project,
    absorber_id: str,
    absorbed_id: str,
    rationale: str,
    *,
    now: Optional[datetime] = None,
) -> Project:
    """Absorb one active thread into another.

    The absorbed thread's evidence moves to the absorber in original order,
    each rationale prefixed with a provenance note naming its source thread;
    a synthetic note entry records why the merge happened.  The absorbed
    thread stays in the project as a merged-away shell for lineage.
    """
    if absorber_id == absorbed_id:
        raise RejectionError("cannot merge a thread into itself")
    if not rationale.strip():
        raise RejectionError("rationale required: merges are recorded with a rationale")
    absorber = _active_thread(project, absorber_id)
    absorbed = _active_thread(project, absorbed_id)

    prefix = MERGE_PREFIX_TEMPLATE.format(name=absorbed.name)
    moved = tuple(replace(entry, rationale=prefix + entry.rationale) for entry in absorbed.evidence)
    note = EvidenceEntry(
        target=EvidenceTarget(granularity=GRANULARITY_NOTE),
        rationale=f'[merge of "{absorbed.name}"] {rationale}',
        added_at=_stamp(now),
        timing=TIMING_FORWARD,
    )
    project = project.replace_thread(
        replace(
            absorber,
            evidence=absorber.evidence + moved + (note,),
            merged_from=tuple(sorted(absorber.merged_from + (absorbed_id,))),
        )
    )
    return project.replace_thread(replace(absorbed, status=THREAD_MERGED_AWAY, evidence=()))


def branch_thread(
    project: Project,
    source_id: str,
    name: str,
    description: str,
    *,
    now: Optional[datetime] = None,
    id_factory: IdFactory = new_id,
) -> tuple[Project, str]:
    """Split a new line of inquiry off an existing thread.

    Branching copies lineage, not evidence: the new thread starts empty and
    its evidence is re-curated with fresh rationales.
    """
    source = project.find_thread(source_id)
    if source is None:
        raise NotFoundError(f"no thread with id {source_id}")
    if not name.strip():
        raise RejectionError("thread name required")
    if not description.strip():
        raise RejectionError("thread description required")
    thread = Thread(
        id=id_factory(),
        name=name,
        description=description,
        created_at=_stamp(now),
        branched_from=source.id,
    )
    return project.with_thread(thread), thread.id


def mark_dead_end(
    project: Project,
    thread_id: str,
    rationale: str,
    *,
    now: Optional[datetime] = None,
) -> Project:
    """Close a thread as an abandoned direction, recording why.

    Dead ends are kept, not deleted: documenting failed avenues counters
    survivorship bias.  The thread becomes read-only.
    """
    if not rationale.strip():
        raise RejectionError("rationale required: dead ends are recorded with a closing rationale")
    thread = _active_thread(project, thread_id)
    note = EvidenceEntry(
        target=EvidenceTarget(granularity=GRANULARITY_NOTE),
        rationale=f"[dead end] {rationale}",
        added_at=_stamp(now),
        timing=TIMING_FORWARD,
    )
    return project.replace_thread(
        replace(thread, status=THREAD_DEAD_END, evidence=thread.evidence + (note,))
    )


def seed_from_tag(project: Project, tag: str) -> list[EvidenceTarget]:
    """List every activity and artifact carrying a tag, chronologically.

    A pre-threading helper: the result is ready to feed into add_evidence.
    Ordering is by the (enclosing) activity's occurred_at, with the
    activity itself before its artifacts on ties.  Unknown tags yield an
    empty list rather than an error.
    """
    wanted = tag.strip().lower()
    candidates: list[tuple] = []
    for activity in project.activities:
        if any(label.lower() == wanted for label in activity.tags):
            candidates.append(
                (
                    activity.occurred_at,
                    GRANULARITY_ACTIVITY,
                    activity.id,
                    "",
                    EvidenceTarget(granularity=GRANULARITY_ACTIVITY, activity_id=activity.id),
                )
            )
        for artifact in activity.artifacts:
            if any(label.lower() == wanted for label in artifact.tags):
                candidates.append(
                    (
                        activity.occurred_at,
                        GRANULARITY_ARTIFACT,
                        activity.id,
                        artifact.id,
                        EvidenceTarget(
                            granularity=GRANULARITY_ARTIFACT,
                            activity_id=activity.id,
                            artifact_id=artifact.id,
                        ),
                    )
                )
    candidates.sort(key=lambda item: item[:4])
    return [item[4] for item in candidates]
