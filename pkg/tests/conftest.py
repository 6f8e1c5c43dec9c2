"""Shared fixtures and builders for the test suite."""

from __future__ import annotations

import hashlib
from datetime import datetime, timezone
from pathlib import Path

import pytest

from tracekit import init_repo, ingest_artifact
from tracekit.ids import new_id
from tracekit.model import Activity, Artifact, Project


def ts(text: str) -> datetime:
    """Shorthand timestamp: full ISO or bare date (midnight UTC)."""
    if "T" not in text:
        text += "T00:00:00"
    return datetime.fromisoformat(text).replace(tzinfo=timezone.utc)


def make_memory_artifact(body: bytes = b"stub", **overrides) -> Artifact:
    """An artifact value for filesystem-free model tests."""
    defaults = dict(
        id=new_id(),
        kind="notes",
        description="a note",
        file_ref=f"files/{new_id()}.txt",
        media_class="text",
        checksum=hashlib.sha256(body).hexdigest(),
        tags=(),
    )
    defaults.update(overrides)
    return Artifact(**defaults)


def make_memory_activity(occurred="2021-03-01", **overrides) -> Activity:
    defaults = dict(
        id=new_id(),
        title="a meeting",
        occurred_at=ts(occurred),
        recorded_at=ts("2021-03-02"),
    )
    defaults.update(overrides)
    return Activity(**defaults)


def make_memory_project(**overrides) -> Project:
    defaults = dict(name="jen", title="design study trail", created_at=ts("2021-01-01"))
    defaults.update(overrides)
    return Project(**defaults)


@pytest.fixture
def repo(tmp_path):
    """A freshly initialized repository: (root, project)."""
    root = tmp_path / "repo"
    project = init_repo(root, "jen", "design study trail", now=ts("2021-01-01"))
    return root, project


def add_text_artifact(root: Path, project: Project, activity_id: str, text: str, **kwargs):
    """Ingest a throwaway text file as an artifact; returns (project, artifact_id)."""
    source = Path(root).parent / f"src-{new_id()}.txt"
    source.write_text(text, encoding="utf-8")
    kwargs.setdefault("kind", "notes")
    kwargs.setdefault("description", "test artifact")
    kind = kwargs.pop("kind")
    description = kwargs.pop("description")
    return ingest_artifact(root, project, activity_id, source, kind, description, **kwargs)
