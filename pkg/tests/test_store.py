"""Repository persistence: round-trips, atomicity, locking, ingestion."""

from __future__ import annotations

import json
import os

import pytest

from tracekit.errors import LockHeldError, ManifestError, RejectionError
from tracekit.model import add_activity, validate_project
from tracekit.store import (
    SAVE_STAGES,
    ingest_artifact,
    init_repo,
    load_project,
    manifest_bytes,
    repo_lock,
    save_project,
)
from tracekit.threads import add_evidence, create_thread, extract_fragment
from tracekit.model import EvidenceTarget

from conftest import add_text_artifact, ts


# ── init ────────────────────────────────────────────────────────────


def test_init_creates_clean_empty_project(tmp_path):
    project = init_repo(tmp_path / "repo", "jen", "tRRRacer project")
    assert project.name == "jen"
    assert project.activities == ()
    assert validate_project(project, tmp_path / "repo") == []


def test_init_refuses_nonempty_directory(tmp_path):
    target = tmp_path / "busy"
    target.mkdir()
    (target / "stray.txt").write_text("hello")
    with pytest.raises(RejectionError):
        init_repo(target, "jen", "t")


def test_init_rejects_bad_project_name(tmp_path):
    with pytest.raises(RejectionError):
        init_repo(tmp_path / "x", "Jen Rogers", "t")


def test_init_then_load_round_trips(tmp_path):
    root = tmp_path / "repo"
    project = init_repo(root, "jen", "t", now=ts("2021-01-01"))
    loaded, violations = load_project(root)
    assert loaded == project
    assert violations == []


# ── save/load round-trips and determinism ───────────────────────────


def _populated(repo):
    root, project = repo
    project, activity_id = add_activity(
        project, "kickoff", ts("2021-02-15T14:00:00"), tags=["threading"], recorded_at=ts("2021-03-02")
    )
    project, artifact_id = add_text_artifact(
        root, project, activity_id, "We sketched the thread concept together.",
        kind="notes", description="kickoff notes", tags=("threading",),
    )
    project, thread_id = create_thread(project, "threads", "concept evolution", now=ts("2021-06-01"))
    fragment = extract_fragment(root, project, artifact_id, 3, 11)
    target = EvidenceTarget(
        granularity="fragment", activity_id=activity_id, artifact_id=artifact_id, fragment=fragment
    )
    project = add_evidence(project, thread_id, target, "the very first sketch", now=ts("2021-06-02"))
    return root, project


def test_save_load_round_trip_is_structurally_equal(repo):
    root, project = _populated(repo)
    save_project(root, project)
    loaded, violations = load_project(root)
    assert violations == []
    assert loaded == project


def test_manifest_is_byte_deterministic(repo):
    root, project = _populated(repo)
    save_project(root, project)
    first = (root / "trace.json").read_bytes()
    save_project(root, project)
    assert (root / "trace.json").read_bytes() == first
    assert manifest_bytes(project) == first
    assert b"\r" not in first


def test_save_refuses_dirty_project_unless_forced(repo):
    root, project = repo
    project, activity_id = add_activity(project, "meeting", ts("2021-02-15"))
    project, artifact_id = add_text_artifact(root, project, activity_id, "body")
    # Corrupt the stored bytes so the checksum no longer matches.
    found = project.find_artifact(artifact_id)
    (root / found[1].file_ref).write_text("tampered")
    with pytest.raises(RejectionError):
        save_project(root, project)
    save_project(root, project, allow_violations=True)


def test_load_missing_manifest_names_file(tmp_path):
    with pytest.raises(ManifestError) as exc:
        load_project(tmp_path)
    assert "trace.json" in str(exc.value)


def test_load_corrupt_manifest_names_position(repo):
    root, project = repo
    (root / "trace.json").write_text('{"name": "jen", !broken')
    with pytest.raises(ManifestError) as exc:
        load_project(root)
    message = str(exc.value)
    assert "trace.json" in message and "line" in message and "column" in message


def test_load_flags_checksum_mismatch_but_succeeds(repo):
    root, project = _populated(repo)
    save_project(root, project)
    artifact = project.activities[0].artifacts[0]
    path = root / artifact.file_ref
    path.write_text("PREPENDED " + path.read_text())  # shifts every fragment offset
    loaded, violations = load_project(root)
    rules = {v.rule for v in violations}
    assert "checksum-mismatch" in rules
    assert "fragment-drift" in rules  # quoted span no longer matches either
    assert loaded.name == "jen"


# ── crash safety ────────────────────────────────────────────────────


class _Boom(Exception):
    pass


@pytest.mark.parametrize("stage", SAVE_STAGES)
def test_interrupted_save_leaves_old_or_new_state(repo, stage):
    root, project = _populated(repo)
    save_project(root, project)
    old_bytes = (root / "trace.json").read_bytes()

    project2, _ = add_activity(project, "later session", ts("2021-08-01"))
    new_bytes = manifest_bytes(project2)

    def hook(point):
        if point == stage:
            raise _Boom(point)

    with pytest.raises(_Boom):
        save_project(root, project2, fault_hook=hook)

    observed = (root / "trace.json").read_bytes()
    assert observed in (old_bytes, new_bytes)
    loaded, violations = load_project(root)  # never a parse error
    assert loaded.name == "jen"
    assert not list(root.glob("trace.json.tmp.*")), "temp files are cleaned up"
    # The lock is released even on a crash mid-save.
    save_project(root, project2)


# ── locking ─────────────────────────────────────────────────────────


def test_second_writer_fails_fast(repo):
    root, project = repo
    with repo_lock(root):
        with pytest.raises(LockHeldError) as exc:
            save_project(root, project)
        assert exc.value.holder.get("pid") == os.getpid()
    save_project(root, project)  # released afterwards


def test_lock_file_carries_writer_metadata(repo):
    root, _ = repo
    with repo_lock(root):
        metadata = json.loads((root / ".trace.lock").read_text())
        assert metadata["pid"] == os.getpid()
        assert "acquired_at" in metadata
    assert not (root / ".trace.lock").exists()


# ── ingest ──────────────────────────────────────────────────────────


def test_ingest_text_file_as_transcript(repo, tmp_path):
    root, project = repo
    project, activity_id = add_activity(project, "interview", ts("2021-02-01"))
    source = tmp_path / "interview1.txt"
    source.write_text("Q: why threads? A: to trace learning.")
    project, artifact_id = ingest_artifact(
        root, project, activity_id, source, "transcript", "first interview"
    )
    _, artifact = project.find_artifact(artifact_id)
    assert artifact.media_class == "text"
    assert artifact.kind == "transcript"
    assert (root / artifact.file_ref).read_text() == source.read_text()


def test_ingest_requires_description(repo, tmp_path):
    root, project = repo
    project, activity_id = add_activity(project, "interview", ts("2021-02-01"))
    source = tmp_path / "x.txt"
    source.write_text("hi")
    with pytest.raises(RejectionError) as exc:
        ingest_artifact(root, project, activity_id, source, "transcript", "")
    assert "description required" in str(exc.value)
    with pytest.raises(RejectionError) as exc:
        ingest_artifact(root, project, activity_id, source, "", "described")
    assert "kind required" in str(exc.value)


def test_ingest_rejects_disallowed_extension(repo, tmp_path):
    root, project = repo
    project, activity_id = add_activity(project, "session", ts("2021-02-01"))
    source = tmp_path / "tool.exe"
    source.write_bytes(b"MZ")
    with pytest.raises(RejectionError) as exc:
        ingest_artifact(root, project, activity_id, source, "notes", "binary")
    assert "txt" in str(exc.value)  # the allowed list is spelled out


def test_ingest_same_file_twice_gives_distinct_artifacts_equal_checksums(repo, tmp_path):
    root, project = repo
    project, activity_id = add_activity(project, "session", ts("2021-02-01"))
    source = tmp_path / "same.txt"
    source.write_text("identical bytes")
    project, first = ingest_artifact(root, project, activity_id, source, "notes", "copy one")
    project, second = ingest_artifact(root, project, activity_id, source, "notes", "copy two")
    assert first != second
    a = project.find_artifact(first)[1]
    b = project.find_artifact(second)[1]
    assert a.checksum == b.checksum
    assert a.file_ref != b.file_ref


def test_ingest_infers_media_class_from_extension(repo, tmp_path):
    root, project = repo
    project, activity_id = add_activity(project, "session", ts("2021-02-01"))
    source = tmp_path / "shot.png"
    source.write_bytes(b"\x89PNG fake")
    project, artifact_id = ingest_artifact(root, project, activity_id, source, "screenshot", "ui state")
    assert project.find_artifact(artifact_id)[1].media_class == "image"


def test_ingest_new_kind_extends_vocabulary(repo, tmp_path):
    root, project = repo
    project, activity_id = add_activity(project, "session", ts("2021-02-01"))
    source = tmp_path / "w.txt"
    source.write_text("whiteboard dump")
    project, _ = ingest_artifact(root, project, activity_id, source, "whiteboard", "board photo notes")
    assert "whiteboard" in project.kind_vocabulary


def test_orphan_file_is_flagged_but_does_not_block_saves(repo):
    root, project = repo
    (root / "files" / "stray.txt").write_text("left behind")
    report = validate_project(project, root)
    assert any(v.rule == "orphan-file" for v in report)
    save_project(root, project)  # hygiene issue, not a save blocker
