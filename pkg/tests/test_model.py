"""Domain rules: timing classification and project validation."""

from __future__ import annotations

import random
from dataclasses import replace
from datetime import timedelta

import pytest
from hypothesis import given, strategies as st

from tracekit.errors import NotFoundError, RejectionError
from tracekit.model import (
    EvidenceEntry,
    EvidenceTarget,
    Tag,
    Thread,
    add_activity,
    classify_timing,
    tag_entity,
    validate_project,
)

from conftest import make_memory_activity, make_memory_artifact, make_memory_project, ts


# ── classify_timing ─────────────────────────────────────────────────


def test_earlier_activity_is_retroactive():
    assert classify_timing(ts("2021-03-01"), ts("2021-06-01")) == "retroactive"


def test_tie_counts_as_forward():
    assert classify_timing(ts("2021-06-01"), ts("2021-06-01")) == "forward"


def test_later_activity_is_forward():
    assert classify_timing(ts("2021-07-01"), ts("2021-06-01")) == "forward"


def test_timing_matches_brute_force_oracle():
    rng = random.Random(2021)
    base = ts("2020-01-01")
    for _ in range(500):
        occurred = base + timedelta(seconds=rng.randrange(0, 10**8))
        created = base + timedelta(seconds=rng.randrange(0, 10**8))
        expected = "retroactive" if occurred < created else "forward"
        assert classify_timing(occurred, created) == expected


# ── validate_project ────────────────────────────────────────────────


def test_fresh_project_validates_clean():
    assert validate_project(make_memory_project()) == []


def test_missing_description_is_flagged():
    artifact = make_memory_artifact(description="")
    activity = make_memory_activity(artifacts=(artifact,))
    project = make_memory_project(activities=(activity,))
    report = validate_project(project)
    assert any(v.rule == "missing-description" and v.entity_id == artifact.id for v in report)
    assert any("missing description" in str(v) for v in report)


def test_dangling_evidence_reference_is_flagged():
    activity = make_memory_activity()
    target = EvidenceTarget(granularity="activity", activity_id=activity.id)
    entry = EvidenceEntry(target=target, rationale="because", added_at=ts("2021-06-02"), timing="retroactive")
    thread = Thread(
        id=make_memory_activity().id,
        name="t",
        description="d",
        created_at=ts("2021-06-01"),
        evidence=(entry,),
    )
    # Thread added, activity deliberately absent from the project.
    project = make_memory_project(threads=(thread,))
    report = validate_project(project)
    assert [v.rule for v in report] == ["dangling-reference"]


def test_validation_is_idempotent_and_ordered():
    artifact = make_memory_artifact(description="", kind="")
    activity = make_memory_activity(title="", artifacts=(artifact,))
    project = make_memory_project(activities=(activity,))
    first = validate_project(project)
    second = validate_project(project)
    assert first == second
    assert first == sorted(first, key=lambda v: (v.entity_id, v.rule, v.message))


def test_duplicate_ids_are_flagged_globally():
    activity = make_memory_activity()
    thread = Thread(id=activity.id, name="t", description="d", created_at=ts("2021-06-01"))
    project = make_memory_project(activities=(activity,), threads=(thread,))
    assert any(v.rule == "duplicate-id" for v in validate_project(project))


def test_bad_id_form_is_flagged():
    activity = make_memory_activity(id="not-a-canonical-id")
    project = make_memory_project(activities=(activity,))
    assert any(v.rule == "bad-id-form" for v in validate_project(project))


def test_stored_timing_must_match_recomputation():
    activity = make_memory_activity(occurred="2021-03-01")
    target = EvidenceTarget(granularity="activity", activity_id=activity.id)
    entry = EvidenceEntry(target=target, rationale="why", added_at=ts("2021-07-01"), timing="forward")
    thread = Thread(
        id=make_memory_activity().id,
        name="t",
        description="d",
        created_at=ts("2021-06-01"),  # activity predates creation: retroactive expected
        evidence=(entry,),
    )
    project = make_memory_project(activities=(activity,), threads=(thread,))
    assert any(v.rule == "bad-timing" for v in validate_project(project))


def test_merged_away_must_be_referenced_exactly_once():
    orphan = Thread(
        id=make_memory_activity().id,
        name="gone",
        description="d",
        created_at=ts("2021-06-01"),
        status="merged_away",
    )
    project = make_memory_project(threads=(orphan,))
    assert any(v.rule == "merge-lineage" for v in validate_project(project))


def test_lineage_cycle_is_flagged():
    a_id = make_memory_activity().id
    b_id = make_memory_activity().id
    thread_a = Thread(id=a_id, name="a", description="d", created_at=ts("2021-06-01"), branched_from=b_id)
    thread_b = Thread(id=b_id, name="b", description="d", created_at=ts("2021-06-01"), branched_from=a_id)
    project = make_memory_project(threads=(thread_a, thread_b))
    assert any(v.rule == "lineage-cycle" for v in validate_project(project))


def test_case_insensitive_duplicate_tags_flagged():
    project = make_memory_project(tag_vocabulary=(Tag("Design"), Tag("design")))
    assert any(v.rule == "duplicate-tag" for v in validate_project(project))


# ── recording helpers ───────────────────────────────────────────────


def test_add_activity_requires_title():
    with pytest.raises(RejectionError):
        add_activity(make_memory_project(), "  ", ts("2021-03-01"))


def test_add_activity_extends_tag_vocabulary():
    project, activity_id = add_activity(
        make_memory_project(), "sketching session", ts("2021-03-01"), tags=["ideation"]
    )
    assert any(t.label == "ideation" for t in project.tag_vocabulary)
    assert project.find_activity(activity_id).tags == ("ideation",)


def test_tagging_reuses_vocabulary_spelling():
    project, activity_id = add_activity(
        make_memory_project(), "meeting", ts("2021-03-01"), tags=["Design"]
    )
    project = tag_entity(project, activity_id, ["design"])
    assert project.find_activity(activity_id).tags == ("Design",)
    assert sum(1 for t in project.tag_vocabulary if t.label.lower() == "design") == 1


def test_tagging_unknown_entity_rejected():
    with pytest.raises(NotFoundError):
        tag_entity(make_memory_project(), "nope", ["x"])


# ── whole-project properties ────────────────────────────────────────


@given(
    occurred=st.datetimes(min_value=ts("2015-01-01").replace(tzinfo=None), max_value=ts("2025-01-01").replace(tzinfo=None)),
    created=st.datetimes(min_value=ts("2015-01-01").replace(tzinfo=None), max_value=ts("2025-01-01").replace(tzinfo=None)),
)
def test_timing_recomputation_is_stable(occurred, created):
    first = classify_timing(occurred, created)
    assert classify_timing(occurred, created) == first
    assert first in ("retroactive", "forward")


def test_recomputing_stored_timings_changes_nothing():
    activity = make_memory_activity(occurred="2021-03-01")
    thread_id = make_memory_activity().id
    target = EvidenceTarget(granularity="activity", activity_id=activity.id)
    entry = EvidenceEntry(target=target, rationale="why", added_at=ts("2021-07-01"), timing="retroactive")
    thread = Thread(id=thread_id, name="t", description="d", created_at=ts("2021-06-01"), evidence=(entry,))
    project = make_memory_project(activities=(activity,), threads=(thread,))

    recomputed = replace(
        thread,
        evidence=tuple(
            replace(e, timing=classify_timing(activity.occurred_at, thread.created_at))
            for e in thread.evidence
        ),
    )
    assert project.replace_thread(recomputed) == project
