"""Report ingestion, per-section citation indexing, and link verification."""

from __future__ import annotations

import pytest

from tracekit.citation import Citation, format_citation
from tracekit.errors import RejectionError
from tracekit.model import add_activity
from tracekit.reports import index_report, ingest_report, verify_report
from tracekit.store import load_project, save_project
from tracekit.threads import add_evidence, create_thread
from tracekit.model import EvidenceTarget

from conftest import add_text_artifact, ts


def _cite(project_name: str, granularity: str, entity_id: str, view: str = "overview") -> str:
    return format_citation(Citation(project_name, view, granularity, entity_id))


def _seeded_repo(repo):
    """A repository with two activities, one artifact, one thread."""
    root, project = repo
    project, a1 = add_activity(project, "kickoff", ts("2021-02-01"))
    project, a2 = add_activity(project, "workshop", ts("2021-03-01"))
    project, artifact_id = add_text_artifact(root, project, a1, "notes body")
    project, thread_id = create_thread(project, "concept", "evolution", now=ts("2021-06-01"))
    project = add_evidence(
        project, thread_id, EvidenceTarget(granularity="activity", activity_id=a1), "first"
    )
    return root, project, a1, a2, artifact_id, thread_id


def _write_report(tmp_path, text):
    path = tmp_path / "manuscript.md"
    path.write_text(text, encoding="utf-8")
    return path


def test_ingest_copies_and_registers(repo, tmp_path):
    root, project = repo
    path = _write_report(tmp_path, "# Intro\n\nno links yet\n")
    project, report_id = ingest_report(root, project, path, "design study report")
    report = project.find_report(report_id)
    assert report.title == "design study report"
    assert (root / report.path).read_text() == path.read_text()
    save_project(root, project)
    assert load_project(root).violations == []


def test_ingest_rejects_non_utf8(repo, tmp_path):
    root, project = repo
    path = tmp_path / "broken.md"
    path.write_bytes(b"\xff\xfe garbage")
    with pytest.raises(RejectionError):
        ingest_report(root, project, path, "nope")


def test_index_buckets_citations_by_section(repo, tmp_path):
    root, project, a1, a2, artifact_id, thread_id = _seeded_repo(repo)
    text = (
        "# Process\n"
        f"We met first {_cite('jen', 'activity', a1)} and again {_cite('jen', 'activity', a2)}.\n"
        "# Findings\n"
        f"The thread tells it best {_cite('jen', 'thread', thread_id, view='paper')}.\n"
    )
    path = _write_report(tmp_path, text)
    project, report_id = ingest_report(root, project, path, "report")
    index = index_report(root, project, report_id)
    assert [s.heading for s in index.sections] == ["Process", "Findings"]
    assert [len(s.citations) for s in index.sections] == [2, 1]
    assert index.broken == ()
    offsets = [c.char_offset for c in index.sections[0].citations]
    assert offsets == sorted(offsets)


def test_index_zero_citations(repo, tmp_path):
    root, project = repo
    path = _write_report(tmp_path, "# One\ncalm prose\n# Two\nmore prose\n")
    project, report_id = ingest_report(root, project, path, "quiet")
    index = index_report(root, project, report_id)
    assert [len(s.citations) for s in index.sections] == [0, 0]
    assert index.broken == ()


def test_preamble_citations_get_ordinal_zero(repo, tmp_path):
    root, project, a1, *_ = _seeded_repo(repo)
    path = _write_report(tmp_path, f"before any heading {_cite('jen', 'activity', a1)}\n# Later\n")
    project, report_id = ingest_report(root, project, path, "r")
    index = index_report(root, project, report_id)
    assert index.sections[0].ordinal == 0
    assert index.sections[0].heading == ""
    assert len(index.sections[0].citations) == 1


def test_dangling_citation_lands_in_broken(repo, tmp_path):
    root, project = repo
    missing = "\\trrracer{jen}{overview}{thread}{00000000-0000-0000-0000-000000000000}"
    path = _write_report(tmp_path, f"# S\n{missing}\n")
    project, report_id = ingest_report(root, project, path, "r")
    index = index_report(root, project, report_id)
    assert index.placed_count == 0
    assert len(index.broken) == 1
    assert "no thread" in index.broken[0].reason


def test_malformed_citation_lands_in_broken_with_position(repo, tmp_path):
    root, project = repo
    text = "# S\nbad link \\trrracer{jen}{sideways}{thread}{x} here\n"
    path = _write_report(tmp_path, text)
    project, report_id = ingest_report(root, project, path, "r")
    index = index_report(root, project, report_id)
    assert len(index.broken) == 1
    broken = index.broken[0]
    assert broken.position == text.index("\\trrracer")
    assert "sideways" in broken.reason


def test_nothing_dropped_accounting(repo, tmp_path):
    root, project, a1, a2, artifact_id, thread_id = _seeded_repo(repo)
    text = (
        f"pre {_cite('jen', 'activity', a1)}\n"
        "# A\n"
        f"{_cite('jen', 'artifact', artifact_id)} and broken \\trrracer{{jen}}{{x}}{{thread}}{{y}}\n"
        "# B\n"
        f"{_cite('jen', 'thread', thread_id)} and dangling {_cite('jen', 'activity', '11111111-1111-1111-1111-111111111111')}\n"
    )
    path = _write_report(tmp_path, text)
    project, report_id = ingest_report(root, project, path, "r")
    index = index_report(root, project, report_id)
    total_macros = text.count("\\trrracer")
    assert index.placed_count + len(index.broken) == total_macros


def test_verify_passes_clean_report(repo, tmp_path):
    root, project, a1, *_ = _seeded_repo(repo)
    path = _write_report(tmp_path, f"# S\n{_cite('jen', 'activity', a1)}\n")
    project, report_id = ingest_report(root, project, path, "r")
    verification = verify_report(root, project, report_id)
    assert verification.passed
    assert verification.reasons == ()


def test_verify_fails_on_private_activity_citation(repo, tmp_path):
    root, project = repo
    project, private_id = add_activity(project, "closed-door interview", ts("2021-02-01"), private=True)
    path = _write_report(tmp_path, f"# S\n{_cite('jen', 'activity', private_id)}\n")
    project, report_id = ingest_report(root, project, path, "r")
    verification = verify_report(root, project, report_id)
    assert not verification.passed
    assert any(f"cites private activity {private_id}" == reason for reason in verification.reasons)


def test_verify_fails_on_uncleared_binary_citation(repo, tmp_path):
    from tracekit.store import ingest_artifact

    root, project = repo
    project, activity_id = add_activity(project, "session", ts("2021-02-01"))
    source = tmp_path / "pic.png"
    source.write_bytes(b"\x89PNG")
    project, artifact_id = ingest_artifact(root, project, activity_id, source, "photograph", "workshop photo")
    path = _write_report(tmp_path, f"# S\n{_cite('jen', 'artifact', artifact_id)}\n")
    project, report_id = ingest_report(root, project, path, "r")
    verification = verify_report(root, project, report_id)
    assert not verification.passed
    assert any(artifact_id in reason for reason in verification.reasons)


def test_verify_fails_on_broken_citations_naming_positions(repo, tmp_path):
    root, project = repo
    path = _write_report(tmp_path, "# S\n\\trrracer{jen}{overview}{thread}{missing-thread-id}\n")
    project, report_id = ingest_report(root, project, path, "r")
    verification = verify_report(root, project, report_id)
    assert not verification.passed
    assert any("broken citation" in reason for reason in verification.reasons)


def test_indexing_is_deterministic(repo, tmp_path):
    root, project, a1, a2, artifact_id, thread_id = _seeded_repo(repo)
    path = _write_report(tmp_path, f"# S\n{_cite('jen', 'activity', a1)}\n")
    project, report_id = ingest_report(root, project, path, "r")
    assert index_report(root, project, report_id) == index_report(root, project, report_id)
