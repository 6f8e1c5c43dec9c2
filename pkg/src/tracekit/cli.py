"""Command-line surface: recording, reporting, citing, checking, exporting.

Every subcommand is a thin wrapper over the library modules.  Exit codes
are uniform: 0 on success, 1 when a domain rule rejects the request, 2 on
usage errors.  With ``--json``, exactly one structured document is printed
to stdout per invocation and human diagnostics go to stderr; with ``--now``
(and deterministic ids derived from it) whole sessions are reproducible
byte-for-byte.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Optional

import click

from . import export as export_mod
from . import model, reports, store, threads
from .citation import Citation, format_citation, resolve_citation, url_form
from .errors import NotFoundError, RejectionError, TraceError
from .ids import IdFactory, new_id, seeded_id_factory
from .model import format_timestamp, parse_timestamp

PREFIX_MIN = 8


@dataclass
class CliConfig:
    repo_option: Optional[Path]
    machine: bool
    now_override: Optional[datetime]

    def repo_root(self) -> Path:
        """Locate the repository: --repo flag, TRACE_REPO env, else upward search."""
        if self.repo_option is not None:
            return Path(self.repo_option)
        root = store.find_repo_root(Path.cwd())
        if root is None:
            raise RejectionError("no repository found (no trace.json here or above; use --repo)")
        return root

    def now(self) -> Optional[datetime]:
        return self.now_override

    def id_factory_for(self, project: Optional[model.Project], extra: str = "") -> IdFactory:
        if self.now_override is None:
            return new_id
        count = len(project.all_entity_ids()) if project is not None else 0
        seed = f"{format_timestamp(self.now_override)}:{count}:{extra}"
        return seeded_id_factory(seed)


def emit(config: CliConfig, command: str, data: dict, human_lines: list[str]) -> None:
    if config.machine:
        click.echo(json.dumps({"command": command, "ok": True, "data": data}, sort_keys=True))
    else:
        for line in human_lines:
            click.echo(line)


def _fail(config: CliConfig, command: str, error: TraceError) -> None:
    kind = type(error).__name__
    if config.machine:
        click.echo(
            json.dumps(
                {"command": command, "ok": False, "error": {"kind": kind, "message": str(error)}},
                sort_keys=True,
            )
        )
    click.echo(f"error: {error}", err=True)
    sys.exit(1)


def run_guarded(config: CliConfig, command: str, action):
    try:
        return action()
    except click.UsageError:
        raise
    except TraceError as exc:
        _fail(config, command, exc)


def resolve_prefix(project: model.Project, token: str, kinds: tuple[str, ...]) -> str:
    """Resolve an entity id or an unambiguous >=8 character prefix."""
    candidates = [eid for kind, eid in project.all_entity_ids() if kind in kinds]
    if token in candidates:
        return token
    if len(token) < PREFIX_MIN:
        raise click.UsageError(
            f"id prefix {token!r} too short: full ids or prefixes of at least {PREFIX_MIN} characters"
        )
    matches = sorted(eid for eid in candidates if eid.startswith(token))
    if not matches:
        raise NotFoundError(f"no {' or '.join(kinds)} matching {token!r}")
    if len(matches) > 1:
        raise click.UsageError(f"ambiguous id prefix {token!r}; matches: {', '.join(matches)}")
    return matches[0]


def _load(config: CliConfig) -> tuple[Path, model.Project]:
    root = config.repo_root()
    result = store.load_project(root)
    return root, result.project


pass_config = click.make_pass_decorator(CliConfig)


@click.group()
@click.option("--repo", "repo_option", type=click.Path(path_type=Path), envvar="TRACE_REPO", default=None, help="Repository root (default: search upward for trace.json; env TRACE_REPO).")
@click.option("--json", "machine", is_flag=True, help="Emit one machine-readable JSON document on stdout.")
@click.option("--now", "now_override", default=None, help="Clock override (ISO-8601) for reproducible sessions.")
@click.pass_context
def main(ctx: click.Context, repo_option: Optional[Path], machine: bool, now_override: Optional[str]) -> None:
    """Record research artifacts, curate threads, cite evidence, export bundles."""
    parsed: Optional[datetime] = None
    if now_override is not None:
        try:
            parsed = parse_timestamp(now_override)
        except TraceError as exc:
            raise click.UsageError(str(exc)) from None
    ctx.obj = CliConfig(repo_option=repo_option, machine=machine, now_override=parsed)


@main.command()
@click.argument("name")
@click.option("--title", required=True, help="Display title for the project.")
@pass_config
def init(config: CliConfig, name: str, title: str) -> None:
    """Initialize a new repository in the --repo directory (default: cwd)."""

    def action():
        root = config.repo_option if config.repo_option is not None else Path.cwd()
        project = store.init_repo(Path(root), name, title, now=config.now())
        emit(
            config,
            "init",
            {"name": project.name, "title": project.title, "root": str(root)},
            [f"initialized project {project.name!r} at {root}"],
        )

    run_guarded(config, "init", action)


@main.group()
def activity() -> None:
    """Record research activities."""


@activity.command("add")
@click.option("--title", required=True)
@click.option("--occurred", required=True, help="When the event happened (ISO-8601).")
@click.option("--tag", "tags", multiple=True)
@click.option("--private", is_flag=True, help="Hide this activity (and its artifacts) from exports.")
@pass_config
def activity_add(config: CliConfig, title: str, occurred: str, tags: tuple[str, ...], private: bool) -> None:
    """Record a research event (meeting, interview, design session...)."""

    def action():
        root, project = _load(config)
        updated, activity_id = model.add_activity(
            project,
            title,
            parse_timestamp(occurred),
            tags=tags,
            private=private,
            recorded_at=config.now(),
            id_factory=config.id_factory_for(project),
        )
        store.save_project(root, updated)
        emit(config, "activity.add", {"activity_id": activity_id}, [activity_id])

    run_guarded(config, "activity.add", action)


@main.group()
def artifact() -> None:
    """Attach annotated files to activities."""


@artifact.command("add")
@click.argument("activity_id")
@click.argument("file", type=click.Path(path_type=Path))
@click.option("--kind", required=True, help="Artifact type (transcript, memo, sketch, ...).")
@click.option("--desc", required=True, help="Brief description of why this artifact matters.")
@click.option("--tag", "tags", multiple=True)
@click.option("--private", is_flag=True, help="Withhold this artifact from exports.")
@click.option("--cleared", is_flag=True, help="Mark binary media as cleared for export.")
@pass_config
def artifact_add(
    config: CliConfig,
    activity_id: str,
    file: Path,
    kind: str,
    desc: str,
    tags: tuple[str, ...],
    private: bool,
    cleared: bool,
) -> None:
    """Copy FILE into the repository as an artifact of ACTIVITY_ID."""

    def action():
        root, project = _load(config)
        full_id = resolve_prefix(project, activity_id, ("activity",))
        updated, artifact_id = store.ingest_artifact(
            root,
            project,
            full_id,
            file,
            kind,
            desc,
            tags,
            private=private,
            cleared_for_export=cleared,
            id_factory=config.id_factory_for(project),
        )
        stored = updated.find_artifact(artifact_id)
        try:
            store.save_project(root, updated)
        except TraceError:
            if stored is not None:
                (root / stored[1].file_ref).unlink(missing_ok=True)
            raise
        emit(config, "artifact.add", {"artifact_id": artifact_id}, [artifact_id])

    run_guarded(config, "artifact.add", action)


@main.command("tag")
@click.argument("args", nargs=-1, required=True)
@pass_config
def tag_command(config: CliConfig, args: tuple[str, ...]) -> None:
    """`trace tag ls` lists the vocabulary; `trace tag <entity-id> <label>...` tags."""

    def action():
        root, project = _load(config)
        if args == ("ls",):
            data = [{"label": t.label, "note": t.note} for t in sorted(project.tag_vocabulary, key=lambda t: t.label.lower())]
            lines = [f"{t['label']}\t{t['note']}".rstrip() for t in data]
            emit(config, "tag.ls", {"tags": data}, lines or ["(no tags)"])
            return
        if len(args) < 2:
            raise click.UsageError("usage: trace tag <entity-id> <label>... | trace tag ls")
        entity_id = resolve_prefix(project, args[0], ("activity", "artifact"))
        updated = model.tag_entity(project, entity_id, args[1:])
        store.save_project(root, updated)
        emit(config, "tag.add", {"entity_id": entity_id, "labels": sorted(args[1:])}, [f"tagged {entity_id}"])

    run_guarded(config, "tag", action)


@main.group()
def thread() -> None:
    """Curate research threads."""


@thread.command("new")
@click.argument("name")
@click.option("--desc", required=True)
@pass_config
def thread_new(config: CliConfig, name: str, desc: str) -> None:
    """Open a new thread for an emerging concept."""

    def action():
        root, project = _load(config)
        updated, thread_id = threads.create_thread(
            project, name, desc, now=config.now(), id_factory=config.id_factory_for(project)
        )
        store.save_project(root, updated)
        emit(config, "thread.new", {"thread_id": thread_id}, [thread_id])

    run_guarded(config, "thread.new", action)


@thread.command("add")
@click.argument("thread_id")
@click.option("--activity", "activity_id", required=True, help="Activity the evidence comes from.")
@click.option("--artifact", "artifact_id", default=None, help="Narrow to one artifact.")
@click.option("--from", "start", type=int, default=None, help="Fragment start offset (text artifacts).")
@click.option("--to", "end", type=int, default=None, help="Fragment end offset (exclusive).")
@click.option("--why", required=True, help="Rationale: why this evidence belongs here.")
@pass_config
def thread_add(
    config: CliConfig,
    thread_id: str,
    activity_id: str,
    artifact_id: Optional[str],
    start: Optional[int],
    end: Optional[int],
    why: str,
) -> None:
    """Add evidence to THREAD_ID at activity, artifact, or fragment granularity."""

    def action():
        root, project = _load(config)
        tid = resolve_prefix(project, thread_id, ("thread",))
        aid = resolve_prefix(project, activity_id, ("activity",))
        if (start is None) != (end is None):
            raise click.UsageError("--from and --to must be given together")
        if start is not None and artifact_id is None:
            raise click.UsageError("--from/--to need --artifact")
        if artifact_id is None:
            target = model.EvidenceTarget(granularity=model.GRANULARITY_ACTIVITY, activity_id=aid)
        else:
            fid = resolve_prefix(project, artifact_id, ("artifact",))
            if start is None:
                target = model.EvidenceTarget(
                    granularity=model.GRANULARITY_ARTIFACT, activity_id=aid, artifact_id=fid
                )
            else:
                fragment = threads.extract_fragment(root, project, fid, start, end)
                target = model.EvidenceTarget(
                    granularity=model.GRANULARITY_FRAGMENT,
                    activity_id=aid,
                    artifact_id=fid,
                    fragment=fragment,
                )
        updated = threads.add_evidence(project, tid, target, why, now=config.now())
        store.save_project(root, updated)
        entry = updated.find_thread(tid).evidence[-1]
        emit(
            config,
            "thread.add",
            {"thread_id": tid, "index": len(updated.find_thread(tid).evidence) - 1, "timing": entry.timing},
            [f"added {target.granularity} evidence to {tid} ({entry.timing})"],
        )

    run_guarded(config, "thread.add", action)


@thread.command("merge")
@click.argument("into_id")
@click.argument("from_id")
@click.option("--why", required=True, help="Rationale recorded with the merge.")
@pass_config
def thread_merge(config: CliConfig, into_id: str, from_id: str, why: str) -> None:
    """Absorb thread FROM_ID into thread INTO_ID."""

    def action():
        root, project = _load(config)
        absorber = resolve_prefix(project, into_id, ("thread",))
        absorbed = resolve_prefix(project, from_id, ("thread",))
        updated = threads.merge_threads(project, absorber, absorbed, why, now=config.now())
        store.save_project(root, updated)
        emit(config, "thread.merge", {"into": absorber, "from": absorbed}, [f"merged {absorbed} into {absorber}"])

    run_guarded(config, "thread.merge", action)


@thread.command("branch")
@click.argument("from_id")
@click.argument("name")
@click.option("--desc", required=True)
@pass_config
def thread_branch(config: CliConfig, from_id: str, name: str, desc: str) -> None:
    """Split a new line of inquiry off FROM_ID (evidence is re-curated, not copied)."""

    def action():
        root, project = _load(config)
        source = resolve_prefix(project, from_id, ("thread",))
        updated, thread_id = threads.branch_thread(
            project, source, name, desc, now=config.now(), id_factory=config.id_factory_for(project)
        )
        store.save_project(root, updated)
        emit(config, "thread.branch", {"thread_id": thread_id, "branched_from": source}, [thread_id])

    run_guarded(config, "thread.branch", action)


@thread.command("deadend")
@click.argument("thread_id")
@click.option("--why", required=True, help="Why this direction was abandoned.")
@pass_config
def thread_deadend(config: CliConfig, thread_id: str, why: str) -> None:
    """Close THREAD_ID as a documented dead end."""

    def action():
        root, project = _load(config)
        tid = resolve_prefix(project, thread_id, ("thread",))
        updated = threads.mark_dead_end(project, tid, why, now=config.now())
        store.save_project(root, updated)
        emit(config, "thread.deadend", {"thread_id": tid}, [f"closed {tid} as dead end"])

    run_guarded(config, "thread.deadend", action)


@main.command()
@click.argument("granularity", type=click.Choice(["activity", "artifact", "thread"]))
@click.argument("entity_id")
@click.option("--url", "base", default=None, help="Also print the URL form under this base.")
@click.option("--view", type=click.Choice(["overview", "paper"]), default="overview", show_default=True)
@pass_config
def cite(config: CliConfig, granularity: str, entity_id: str, base: Optional[str], view: str) -> None:
    """Print a citation for pasting into a manuscript."""

    def action():
        _, project = _load(config)
        full_id = resolve_prefix(project, entity_id, (granularity,))
        citation = Citation(project=project.name, view=view, granularity=granularity, id=full_id)
        resolve_citation(project, citation)
        text = format_citation(citation)
        data = {"citation": text}
        lines = [text]
        if base is not None:
            url = url_form(citation, base)
            data["url"] = url
            lines.append(url)
        emit(config, "cite", data, lines)

    run_guarded(config, "cite", action)


@main.group()
def report() -> None:
    """Ingest and verify manuscripts with deep links."""


@report.command("add")
@click.argument("file", type=click.Path(path_type=Path))
@click.option("--title", required=True)
@pass_config
def report_add(config: CliConfig, file: Path, title: str) -> None:
    """Copy a manuscript into the repository."""

    def action():
        root, project = _load(config)
        updated, report_id = reports.ingest_report(
            root, project, file, title, id_factory=config.id_factory_for(project)
        )
        stored = updated.find_report(report_id)
        try:
            store.save_project(root, updated)
        except TraceError:
            if stored is not None:
                (root / stored.path).unlink(missing_ok=True)
            raise
        emit(config, "report.add", {"report_id": report_id}, [report_id])

    run_guarded(config, "report.add", action)


@report.command("check")
@click.argument("report_id")
@pass_config
def report_check(config: CliConfig, report_id: str) -> None:
    """Index REPORT_ID and verify every deep link; nonzero exit on problems."""

    def action():
        root, project = _load(config)
        rid = resolve_prefix(project, report_id, ("report",))
        verification = reports.verify_report(root, project, rid)
        data = {
            "report_id": rid,
            "passed": verification.passed,
            "placed": verification.index.placed_count,
            "broken": len(verification.index.broken),
            "reasons": list(verification.reasons),
            "sections": [
                {"heading": s.heading, "ordinal": s.ordinal, "citations": len(s.citations)}
                for s in verification.index.sections
            ],
        }
        lines = [f"report {rid}: {verification.index.placed_count} citation(s) placed, {len(verification.index.broken)} broken"]
        lines += [f"  {reason}" for reason in verification.reasons]
        emit(config, "report.check", data, lines)
        if not verification.passed:
            sys.exit(1)

    run_guarded(config, "report.check", action)


@main.group()
def alias() -> None:
    """Manage the redaction registry."""


@alias.command("add")
@click.argument("full_name")
@click.option("--as", "replacement", default=None, help="Replacement text (default: initials).")
@pass_config
def alias_add(config: CliConfig, full_name: str, replacement: Optional[str]) -> None:
    """Register FULL_NAME for replacement in every export."""

    def action():
        root, project = _load(config)
        updated = export_mod.register_alias(project, full_name, replacement)
        store.save_project(root, updated)
        stored = next(a for a in updated.alias_registry if a.full_name == full_name.strip())
        emit(
            config,
            "alias.add",
            {"full_name": stored.full_name, "replacement": stored.replacement},
            [f"{stored.full_name} -> {stored.replacement}"],
        )

    run_guarded(config, "alias.add", action)


@main.command()
@pass_config
def check(config: CliConfig) -> None:
    """Validate the repository; nonzero exit on any violation."""

    def action():
        root = config.repo_root()
        result = store.load_project(root)
        data = {
            "violations": [
                {"entity_id": v.entity_id, "rule": v.rule, "message": v.message}
                for v in result.violations
            ]
        }
        lines = [str(v) for v in result.violations] or ["ok"]
        emit(config, "check", data, lines)
        if result.violations:
            sys.exit(1)

    run_guarded(config, "check", action)


@main.command("export")
@click.argument("out_dir", type=click.Path(path_type=Path))
@click.option("--force", is_flag=True, help="Export even if validation reports violations.")
@pass_config
def export_command(config: CliConfig, out_dir: Path, force: bool) -> None:
    """Export the redacted, self-contained, read-only bundle to OUT_DIR."""

    def action():
        root, project = _load(config)
        result = export_mod.export_bundle(root, project, out_dir, force=force)
        data = {
            "activities_included": result.activities_included,
            "activities_excluded": result.activities_excluded,
            "artifacts_included": result.artifacts_included,
            "artifacts_excluded": result.artifacts_excluded,
            "artifacts_redacted": result.artifacts_redacted,
            "threads_dropped": result.threads_dropped,
            "threads_trimmed": result.threads_trimmed,
            "reports_included": result.reports_included,
        }
        lines = [
            f"bundle written to {out_dir}",
            f"  activities: {result.activities_included} included, {result.activities_excluded} excluded",
            f"  artifacts:  {result.artifacts_included} included, {result.artifacts_excluded} excluded, {result.artifacts_redacted} redacted",
            f"  threads:    {result.threads_dropped} dropped, {result.threads_trimmed} trimmed",
        ]
        emit(config, "export", data, lines)

    run_guarded(config, "export", action)


@main.command("verify-bundle")
@click.argument("bundle_dir", type=click.Path(path_type=Path))
@pass_config
def verify_bundle_command(config: CliConfig, bundle_dir: Path) -> None:
    """Audit a bundle from its files; nonzero exit on any violation."""

    def action():
        known_names: list[str] = []
        try:
            root = config.repo_root()
            result = store.load_project(root)
            known_names = [a.full_name for a in result.project.alias_registry]
        except TraceError:
            click.echo("note: no source repository at hand; name-leak scan skipped", err=True)
        passed, violations = export_mod.verify_bundle(bundle_dir, known_names)
        data = {
            "passed": passed,
            "violations": [
                {"entity_id": v.entity_id, "rule": v.rule, "message": v.message} for v in violations
            ],
        }
        lines = [str(v) for v in violations] or ["ok"]
        emit(config, "verify-bundle", data, lines)
        if not passed:
            sys.exit(1)

    run_guarded(config, "verify-bundle", action)


@main.command()
@click.argument("tag_label")
@pass_config
def seed(config: CliConfig, tag_label: str) -> None:
    """List tagged activities and artifacts chronologically, for pre-threading."""

    def action():
        _, project = _load(config)
        candidates = threads.seed_from_tag(project, tag_label)
        data = {
            "candidates": [
                {
                    "granularity": c.granularity,
                    "activity_id": c.activity_id,
                    "artifact_id": c.artifact_id or None,
                }
                for c in candidates
            ]
        }
        lines = []
        for c in candidates:
            activity = project.find_activity(c.activity_id)
            when = format_timestamp(activity.occurred_at) if activity else "?"
            suffix = f" artifact {c.artifact_id}" if c.artifact_id else ""
            lines.append(f"{when}  {c.granularity} {c.activity_id}{suffix}")
        emit(config, "seed", data, lines or ["(no matches)"])

    run_guarded(config, "seed", action)


if __name__ == "__main__":
    main()
