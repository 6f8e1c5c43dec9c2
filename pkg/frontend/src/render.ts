/** DOM rendering for the reader.
 *
 * Everything renders from (bundle, state); clicks only ever navigate to a
 * new URL query, so every reachable view has a shareable address. No
 * handler mutates the bundle or talks to the network except through the
 * GET-only helpers in http.ts.
 */

import { getJson, getText } from "./http.js";
import { layoutTimeline, timelineHeight, type Bubble } from "./layout.js";
import { threadPath } from "./overlay.js";
import { entityQuery, queryFromRoute } from "./routing.js";
import { evidenceAbout, sidebarThreads, type ReaderState } from "./state.js";
import type { Bundle, BundleReportRef, Fragment, ReportIndexDoc } from "./types.js";
import { findThread } from "./types.js";

export type Navigate = (query: string) => void;

export interface AppContext {
  bundle: Bundle;
  base: string;
  navigate: Navigate;
  reportCache: Map<string, { text: string; index: ReportIndexDoc }>;
  artifactTextCache: Map<string, string>;
}

const SVG_NS = "http://www.w3.org/2000/svg";
const CITATION_RE = /\\trrracer\{([^{}\s]+)\}\{([^{}\s]+)\}\{([^{}\s]+)\}\{([^{}\s]+)\}/g;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function svgEl(tag: string, attrs: Record<string, string>): SVGElement {
  const node = document.createElementNS(SVG_NS, tag) as SVGElement;
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  return node;
}

export async function renderApp(container: HTMLElement, ctx: AppContext, state: ReaderState): Promise<void> {
  container.textContent = "";
  const root = el("div", "reader");
  container.appendChild(root);

  root.appendChild(renderHeader(ctx, state));

  if (state.notFound !== null) {
    const notice = el("div", "notice not-found");
    notice.appendChild(el("p", "", `Not in this bundle: ${state.notFound}`));
    const back = el("a", "back-link", "back to the overview");
    back.setAttribute("href", "?");
    back.addEventListener("click", (event) => {
      event.preventDefault();
      ctx.navigate("");
    });
    notice.appendChild(back);
    root.appendChild(notice);
    return;
  }

  const columns = el("div", "columns");
  root.appendChild(columns);
  columns.appendChild(renderSidebar(ctx, state));

  const content = el("main", "content");
  columns.appendChild(content);
  if (state.view === "paper") {
    await renderPaperView(content, ctx, state);
  } else {
    content.appendChild(renderOverview(ctx, state));
  }

  if (state.detail) {
    root.appendChild(await renderDetail(ctx, state));
  }
}

function renderHeader(ctx: AppContext, state: ReaderState): HTMLElement {
  const header = el("header", "reader-header");
  header.appendChild(el("h1", "project-title", ctx.bundle.title || ctx.bundle.name));
  const nav = el("nav", "view-switch");
  for (const view of ["overview", "paper"] as const) {
    const button = el("button", view === state.view ? "view-button active" : "view-button", view);
    button.addEventListener("click", () => {
      if (state.route.kind === "entity") {
        ctx.navigate(entityQuery(ctx.bundle.name, view, state.route.granularity, state.route.id, state.tagFilter));
      } else if (view === "paper" && ctx.bundle.reports.length > 0) {
        // Neutral paper view: route to the first report's own page via its thread-less overview query.
        ctx.navigate(`?view=paper${state.tagFilter.map((t) => `&tag=${encodeURIComponent(t)}`).join("")}`);
      } else {
        ctx.navigate(queryFromRoute({ kind: "overview", tags: state.tagFilter }));
      }
    });
    nav.appendChild(button);
  }
  header.appendChild(nav);
  return header;
}

// ── sidebar ─────────────────────────────────────────────────────────

function renderSidebar(ctx: AppContext, state: ReaderState): HTMLElement {
  const aside = el("nav", "sidebar");
  aside.appendChild(el("h2", "", "Threads"));
  const list = el("ul", "thread-list");
  for (const thread of sidebarThreads(ctx.bundle)) {
    const item = el("li", "thread-item");
    item.dataset.threadId = thread.id;
    if (thread.id === state.selectedThread) item.classList.add("selected");
    const button = el("button", "thread-select", thread.name);
    button.addEventListener("click", () => {
      ctx.navigate(entityQuery(ctx.bundle.name, "overview", "thread", thread.id, state.tagFilter));
    });
    item.appendChild(button);
    const badge = el("span", `badge badge-${thread.status}`, thread.status === "dead_end" ? "dead end" : thread.status);
    badge.dataset.status = thread.status;
    item.appendChild(badge);
    if (thread.withheld_count > 0) {
      item.appendChild(el("span", "withheld-count", `${thread.withheld_count} entries withheld`));
    }
    list.appendChild(item);
  }
  aside.appendChild(list);

  if (ctx.bundle.tag_vocabulary.length > 0) {
    aside.appendChild(el("h2", "", "Tags"));
    const tags = el("div", "tag-chips");
    for (const tag of ctx.bundle.tag_vocabulary) {
      const active = state.tagFilter.some((t) => t.toLowerCase() === tag.label.toLowerCase());
      const chip = el("button", active ? "tag-chip active" : "tag-chip", tag.label);
      if (tag.note) chip.title = tag.note;
      chip.addEventListener("click", () => {
        const next = active
          ? state.tagFilter.filter((t) => t.toLowerCase() !== tag.label.toLowerCase())
          : [...state.tagFilter, tag.label];
        if (state.route.kind === "entity") {
          ctx.navigate(entityQuery(ctx.bundle.name, state.route.view, state.route.granularity, state.route.id, next));
        } else {
          ctx.navigate(queryFromRoute({ kind: "overview", tags: next }));
        }
      });
      tags.appendChild(chip);
    }
    aside.appendChild(tags);
  }
  return aside;
}

// ── overview timeline ───────────────────────────────────────────────

function renderOverview(ctx: AppContext, state: ReaderState): HTMLElement {
  const wrapper = el("div", "overview");
  const width = 960;
  const bubbles = layoutTimeline(ctx.bundle, width, state.tagFilter);
  const height = timelineHeight(bubbles);
  const svg = svgEl("svg", {
    class: "timeline",
    viewBox: `0 0 ${width} ${height}`,
    width: String(width),
    height: String(height),
  });
  wrapper.appendChild(svg as unknown as HTMLElement);

  const byActivity = new Map<string, Bubble>(bubbles.map((b) => [b.activityId, b]));

  if (state.selectedThread) {
    const path = threadPath(ctx.bundle, state.selectedThread);
    if (path) {
      for (const segment of path.segments) {
        const from = byActivity.get(segment.fromActivity);
        const to = byActivity.get(segment.toActivity);
        if (!from || !to) continue;
        const line = svgEl("line", {
          class: `thread-link ${segment.dotted ? "dotted" : "solid"}`,
          x1: String(from.x),
          y1: String(from.y),
          x2: String(to.x),
          y2: String(to.y),
        });
        line.setAttribute("data-timing", segment.timing);
        if (segment.dotted) line.setAttribute("stroke-dasharray", "6 4");
        svg.appendChild(line);
      }
      if (path.withheld > 0) {
        const note = svgEl("text", { class: "withheld-note", x: "8", y: "16" });
        note.textContent = `${path.withheld} entries withheld`;
        svg.appendChild(note);
      }
    }
  }

  for (const bubble of bubbles) {
    const group = svgEl("g", { class: "activity-group" });
    const circle = svgEl("circle", {
      class: bubble.dimmed ? "activity-bubble dimmed" : "activity-bubble",
      cx: String(bubble.x),
      cy: String(bubble.y),
      r: String(bubble.radius),
    });
    circle.setAttribute("data-activity-id", bubble.activityId);
    const tooltip = document.createElementNS(SVG_NS, "title");
    tooltip.textContent = `${bubble.title} (${bubble.occurredAt})`;
    circle.appendChild(tooltip);
    circle.addEventListener("click", () => {
      ctx.navigate(entityQuery(ctx.bundle.name, "overview", "activity", bubble.activityId, state.tagFilter));
    });
    group.appendChild(circle);
    for (const dot of bubble.artifacts) {
      const artifactDot = svgEl("circle", {
        class: "artifact-dot",
        cx: String(dot.x),
        cy: String(dot.y),
        r: String(dot.r),
      });
      artifactDot.setAttribute("data-artifact-id", dot.artifactId);
      artifactDot.addEventListener("click", (event) => {
        event.stopPropagation();
        ctx.navigate(entityQuery(ctx.bundle.name, "overview", "artifact", dot.artifactId, state.tagFilter));
      });
      group.appendChild(artifactDot);
    }
    svg.appendChild(group);
  }
  return wrapper;
}

// ── detail popup ────────────────────────────────────────────────────

async function renderDetail(ctx: AppContext, state: ReaderState): Promise<HTMLElement> {
  const detail = state.detail!;
  const popup = el("div", "detail-popup");
  popup.dataset.granularity = detail.granularity;

  const close = el("button", "close-detail", "close");
  close.addEventListener("click", () => {
    ctx.navigate(queryFromRoute({ kind: "overview", tags: state.tagFilter }));
  });
  popup.appendChild(close);

  if (detail.granularity === "activity") {
    popup.appendChild(el("h3", "detail-title", detail.activity.title));
    popup.appendChild(el("p", "detail-meta", `occurred ${detail.activity.occurred_at} · recorded ${detail.activity.recorded_at}`));
    if (detail.activity.tags.length > 0) {
      popup.appendChild(el("p", "detail-tags", detail.activity.tags.join(", ")));
    }
    const list = el("ul", "artifact-list");
    for (const artifact of detail.activity.artifacts) {
      const item = el("li", "artifact-item");
      const link = el("a", "artifact-link", `${artifact.kind}: ${artifact.description}`);
      link.setAttribute("href", entityQuery(ctx.bundle.name, "overview", "artifact", artifact.id, state.tagFilter));
      link.addEventListener("click", (event) => {
        event.preventDefault();
        ctx.navigate(entityQuery(ctx.bundle.name, "overview", "artifact", artifact.id, state.tagFilter));
      });
      item.appendChild(link);
      list.appendChild(item);
    }
    popup.appendChild(list);
  } else {
    const artifact = detail.artifact!;
    popup.appendChild(el("h3", "detail-title", artifact.description));
    popup.appendChild(el("p", "detail-meta", `${artifact.kind} · ${artifact.media_class} · in "${detail.activity.title}"`));
    if (artifact.media_class === "text") {
      const fragments = fragmentsFor(ctx.bundle, artifact.id);
      const text = await artifactText(ctx, artifact.file_ref);
      popup.appendChild(renderHighlightedText(text, fragments));
    } else {
      const media = el("p", "detail-media", `stored as ${artifact.file_ref}`);
      popup.appendChild(media);
    }
  }

  const mentions = evidenceAbout(ctx.bundle, detail.activity.id, detail.artifact?.id);
  if (mentions.length > 0) {
    popup.appendChild(el("h4", "", "In threads"));
    const list = el("ul", "rationale-list");
    for (const mention of mentions) {
      const entry = mention.thread.evidence[mention.entryIndex];
      const item = el("li", "rationale-item");
      item.appendChild(el("span", "rationale-thread", mention.thread.name));
      const rationale = el("span", "rationale-text", ` — ${entry.rationale}`);
      rationale.title = entry.rationale; // tooltip carries the why
      item.appendChild(rationale);
      item.appendChild(el("span", `timing-tag ${entry.timing}`, entry.timing));
      list.appendChild(item);
    }
    popup.appendChild(list);
  }
  return popup;
}

function fragmentsFor(bundle: Bundle, artifactId: string): Fragment[] {
  const fragments: Fragment[] = [];
  for (const thread of bundle.threads) {
    for (const entry of thread.evidence) {
      if (entry.target.artifact_id === artifactId && entry.target.fragment) {
        fragments.push(entry.target.fragment);
      }
    }
  }
  return fragments.sort((a, b) => a.start - b.start);
}

function renderHighlightedText(text: string, fragments: Fragment[]): HTMLElement {
  const pre = el("pre", "artifact-text");
  let cursor = 0;
  for (const fragment of fragments) {
    if (fragment.start < cursor || fragment.end > text.length) continue; // overlapping or drifted
    pre.appendChild(document.createTextNode(text.slice(cursor, fragment.start)));
    const mark = document.createElement("mark");
    mark.className = "fragment-highlight";
    mark.textContent = text.slice(fragment.start, fragment.end);
    pre.appendChild(mark);
    cursor = fragment.end;
  }
  pre.appendChild(document.createTextNode(text.slice(cursor)));
  return pre;
}

async function artifactText(ctx: AppContext, fileRef: string): Promise<string> {
  const cached = ctx.artifactTextCache.get(fileRef);
  if (cached !== undefined) return cached;
  const text = await getText(`${ctx.base}/${fileRef}`);
  ctx.artifactTextCache.set(fileRef, text);
  return text;
}

// ── paper view ──────────────────────────────────────────────────────

async function loadReport(ctx: AppContext, report: BundleReportRef): Promise<{ text: string; index: ReportIndexDoc }> {
  const cached = ctx.reportCache.get(report.id);
  if (cached) return cached;
  const [text, index] = await Promise.all([
    getText(`${ctx.base}/${report.path}`),
    getJson<ReportIndexDoc>(`${ctx.base}/reports/${report.id}.index.json`),
  ]);
  const loaded = { text, index };
  ctx.reportCache.set(report.id, loaded);
  return loaded;
}

interface PaperSection {
  heading: string;
  ordinal: number;
  body: string;
}

export function splitSections(text: string): PaperSection[] {
  const lines = text.split("\n");
  const sections: PaperSection[] = [];
  let heading = "";
  let ordinal = 0;
  let buffer: string[] = [];
  const flush = () => {
    if (ordinal === 0 && buffer.join("").trim() === "") return; // empty preamble
    sections.push({ heading, ordinal, body: buffer.join("\n") });
  };
  for (const line of lines) {
    if (/^#(?!#)/.test(line)) {
      flush();
      heading = line.replace(/^#\s*/, "").trim();
      ordinal += 1;
      buffer = [];
    } else {
      buffer.push(line);
    }
  }
  flush();
  return sections;
}

async function renderPaperView(content: HTMLElement, ctx: AppContext, state: ReaderState): Promise<void> {
  const paper = el("div", "paper-view");
  content.appendChild(paper);
  if (ctx.bundle.reports.length === 0) {
    paper.appendChild(el("p", "notice", "this bundle contains no reports"));
    return;
  }
  const report = ctx.bundle.reports[0];
  const { text, index } = await loadReport(ctx, report);

  paper.appendChild(el("h2", "report-title", report.title));
  const citedId = state.route.kind === "entity" ? state.route.id : null;

  for (const section of splitSections(text)) {
    const sectionEl = el("section", "paper-section");
    sectionEl.dataset.ordinal = String(section.ordinal);
    if (section.heading) sectionEl.appendChild(el("h3", "section-heading", section.heading));

    const body = el("div", "section-body");
    appendLinkifiedText(body, section.body, ctx, state);
    sectionEl.appendChild(body);

    const margin = el("aside", "margin-citations");
    const indexed = index.sections.find((s) => s.ordinal === section.ordinal);
    for (const item of indexed?.citations ?? []) {
      const chip = el(
        "button",
        item.citation.id === citedId ? "citation-chip active" : "citation-chip",
        `${item.citation.granularity} ${item.citation.id.slice(0, 8)}`,
      );
      chip.dataset.citationId = item.citation.id;
      chip.dataset.granularity = item.citation.granularity;
      chip.addEventListener("click", () => {
        ctx.navigate(
          entityQuery(
            item.citation.project,
            "overview",
            item.citation.granularity as "activity" | "artifact" | "thread",
            item.citation.id,
            state.tagFilter,
          ),
        );
      });
      margin.appendChild(chip);
    }
    sectionEl.appendChild(margin);
    paper.appendChild(sectionEl);
  }

  if (citedId && state.selectedThread) {
    const thread = findThread(ctx.bundle, state.selectedThread);
    if (thread) {
      const panel = el("aside", "cited-thread-panel");
      panel.appendChild(el("h3", "", thread.name));
      panel.appendChild(el("p", "", thread.description));
      const list = el("ul", "rationale-list");
      for (const entry of thread.evidence) {
        const item = el("li", `evidence-entry ${entry.timing}`);
        item.appendChild(el("span", "rationale-text", entry.rationale));
        list.appendChild(item);
      }
      panel.appendChild(list);
      paper.prepend(panel);
    }
  }
}

function appendLinkifiedText(target: HTMLElement, text: string, ctx: AppContext, state: ReaderState): void {
  let cursor = 0;
  for (const match of text.matchAll(CITATION_RE)) {
    const [whole, project, , granularity, id] = match;
    const start = match.index ?? 0;
    target.appendChild(document.createTextNode(text.slice(cursor, start)));
    const link = el("a", "deep-link", whole);
    const query = entityQuery(
      project,
      "overview",
      granularity as "activity" | "artifact" | "thread",
      id,
      state.tagFilter,
    );
    link.setAttribute("href", query);
    link.dataset.targetId = id;
    link.addEventListener("click", (event) => {
      event.preventDefault();
      ctx.navigate(query);
    });
    target.appendChild(link);
    cursor = start + whole.length;
  }
  target.appendChild(document.createTextNode(text.slice(cursor)));
}
