import { beforeEach, describe, expect, it } from "vitest";

import { renderApp, type AppContext } from "../src/render.js";
import { entityQuery } from "../src/routing.js";
import { deriveState } from "../src/state.js";
import type { Bundle } from "../src/types.js";
import { assertOnlyGets, installFixtureFetch, type RecordedCall } from "./helpers.js";
import { loadFixtureBundle } from "./helpers.js";

const bundle: Bundle = loadFixtureBundle();
const mainThread = bundle.threads.find((t) => t.name === "threading concept")!;
const deadEnd = bundle.threads.find((t) => t.status === "dead_end")!;

let calls: RecordedCall[];
let container: HTMLElement;
let navigations: string[];
let ctx: AppContext;

beforeEach(() => {
  calls = installFixtureFetch();
  document.body.innerHTML = '<div id="app"></div>';
  container = document.getElementById("app")!;
  navigations = [];
  ctx = {
    bundle,
    base: ".",
    navigate: (query) => navigations.push(query),
    reportCache: new Map(),
    artifactTextCache: new Map(),
  };
});

async function show(query: string): Promise<void> {
  await renderApp(container, ctx, deriveState(bundle, query));
}

describe("overview timeline", () => {
  it("shows exactly the bundle's activities with nested artifacts", async () => {
    await show("");
    const bubbles = container.querySelectorAll(".activity-bubble");
    expect(bubbles).toHaveLength(bundle.activities.length);
    const ids = [...bubbles].map((b) => b.getAttribute("data-activity-id"));
    expect(new Set(ids)).toEqual(new Set(bundle.activity_index));
    const dots = container.querySelectorAll(".artifact-dot");
    expect(dots).toHaveLength(bundle.activities.reduce((n, a) => n + a.artifacts.length, 0));
    assertOnlyGets(calls);
  });

  it("dims non-matching activities under a tag filter", async () => {
    await show("?tag=privacy");
    const dimmed = container.querySelectorAll(".activity-bubble.dimmed");
    const expected = bundle.activities.filter(
      (a) => !a.tags.includes("privacy") && a.artifacts.every((f) => !f.tags.includes("privacy")),
    );
    expect(dimmed).toHaveLength(expected.length);
    expect(expected.length).toBeGreaterThan(0);
  });

  it("clicking a bubble navigates to that activity's URL", async () => {
    await show("");
    const bubble = container.querySelector<SVGElement>(".activity-bubble")!;
    bubble.dispatchEvent(new MouseEvent("click", { bubbles: true }));
    expect(navigations).toHaveLength(1);
    expect(navigations[0]).toContain("granularity=activity");
    expect(navigations[0]).toContain(`id=${bubble.getAttribute("data-activity-id")}`);
  });
});

describe("thread overlay", () => {
  it("draws dotted links on retroactive entries and solid on forward, from bundle fields", async () => {
    await show(entityQuery("jen", "overview", "thread", mainThread.id));
    const links = [...container.querySelectorAll(".thread-link")];
    const stops = mainThread.evidence.filter((e) => e.target.granularity !== "note");
    expect(links).toHaveLength(stops.length - 1);
    links.forEach((link, i) => {
      const stored = stops[i + 1].timing;
      expect(link.getAttribute("data-timing")).toBe(stored);
      if (stored === "retroactive") {
        expect(link.classList.contains("dotted")).toBe(true);
        expect(link.getAttribute("stroke-dasharray")).toBeTruthy();
      } else {
        expect(link.classList.contains("solid")).toBe(true);
        expect(link.getAttribute("stroke-dasharray")).toBeNull();
      }
    });
    expect(links.some((l) => l.classList.contains("dotted"))).toBe(true);
    expect(links.some((l) => l.classList.contains("solid"))).toBe(true);
  });

  it("renders a withheld placeholder where evidence was redacted", async () => {
    await show(entityQuery("jen", "overview", "thread", mainThread.id));
    const note = container.querySelector(".withheld-note");
    expect(note?.textContent).toBe(`${mainThread.withheld_count} entries withheld`);
  });
});

describe("thread sidebar", () => {
  it("lists active and dead-end threads with status badges, hides merged-away", async () => {
    await show("");
    const items = [...container.querySelectorAll(".thread-item")];
    const expected = bundle.threads.filter((t) => t.status !== "merged_away");
    expect(items).toHaveLength(expected.length);
    const badges = items.map((i) => i.querySelector(".badge")!.getAttribute("data-status"));
    expect(badges).toContain("active");
    expect(badges).toContain("dead_end");
    expect(badges).not.toContain("merged_away");
  });

  it("selection drives the overlay and is reflected in the URL", async () => {
    await show("");
    const button = [...container.querySelectorAll<HTMLElement>(".thread-item")]
      .find((i) => i.getAttribute("data-thread-id") === deadEnd.id)!
      .querySelector("button")!;
    button.click();
    expect(navigations[0]).toContain(`id=${deadEnd.id}`);
    await show(navigations[0]);
    expect(container.querySelector(".thread-item.selected")!.getAttribute("data-thread-id")).toBe(deadEnd.id);
  });
});

describe("detail view", () => {
  it("activity detail lists artifacts and evidence rationales", async () => {
    const cited = mainThread.evidence.find((e) => e.target.granularity === "activity")!;
    await show(entityQuery("jen", "overview", "activity", cited.target.activity_id!));
    const popup = container.querySelector(".detail-popup")!;
    expect(popup.getAttribute("data-granularity")).toBe("activity");
    const rationales = [...popup.querySelectorAll(".rationale-text")].map((r) => r.textContent);
    expect(rationales.some((r) => r?.includes(cited.rationale))).toBe(true);
  });

  it("artifact detail highlights fragment spans in the stored text", async () => {
    const fragmentEntry = mainThread.evidence.find((e) => e.target.granularity === "fragment")!;
    await show(entityQuery("jen", "overview", "artifact", fragmentEntry.target.artifact_id!));
    const mark = container.querySelector("mark.fragment-highlight");
    expect(mark?.textContent).toBe(fragmentEntry.target.fragment!.quoted_text);
    assertOnlyGets(calls);
  });
});

describe("paper view", () => {
  it("renders sections with margin citations from the shipped index", async () => {
    await show(entityQuery("jen", "paper", "thread", mainThread.id));
    const sections = [...container.querySelectorAll(".paper-section")];
    expect(sections.length).toBeGreaterThanOrEqual(2);
    const chipCounts = sections.map((s) => s.querySelectorAll(".citation-chip").length);
    expect(chipCounts.reduce((a, b) => a + b, 0)).toBe(3); // fixture places three citations
    const inline = container.querySelectorAll(".deep-link");
    expect(inline.length).toBeGreaterThan(0);
    assertOnlyGets(calls);
  });

  it("clicking a margin citation navigates to its target", async () => {
    await show(entityQuery("jen", "paper", "thread", mainThread.id));
    const chip = container.querySelector<HTMLElement>(".citation-chip")!;
    chip.click();
    expect(navigations[0]).toContain(`id=${chip.getAttribute("data-citation-id")}`);
  });
});

describe("not-found handling", () => {
  it("unknown ids show a visible notice, never a blank screen", async () => {
    await show(entityQuery("jen", "overview", "thread", "does-not-exist"));
    const notice = container.querySelector(".notice.not-found");
    expect(notice?.textContent).toContain("does-not-exist");
  });

  it("malformed queries show the reason", async () => {
    await show("?project=jen&view=nope&granularity=thread&id=x");
    expect(container.querySelector(".notice.not-found")?.textContent).toContain("nope");
  });
});

describe("read-only guarantee", () => {
  it("a full browsing session issues zero non-GET requests", async () => {
    await show("");
    await show(entityQuery("jen", "overview", "thread", mainThread.id));
    const artifactId = bundle.activities.flatMap((a) => a.artifacts)[0].id;
    await show(entityQuery("jen", "overview", "artifact", artifactId));
    await show(entityQuery("jen", "paper", "thread", mainThread.id));
    await show("?tag=privacy");
    expect(calls.length).toBeGreaterThan(0);
    assertOnlyGets(calls);
  });
});
