import { describe, expect, it } from "vitest";

import { threadPath } from "../src/overlay.js";
import type { Bundle } from "../src/types.js";
import { loadFixtureBundle } from "./helpers.js";

const bundle: Bundle = loadFixtureBundle();
const mainThread = bundle.threads.find((t) => t.name === "threading concept")!;

describe("threadPath", () => {
  it("walks evidence in order, skipping note entries", () => {
    const path = threadPath(bundle, mainThread.id)!;
    const expected = mainThread.evidence.filter((e) => e.target.granularity !== "note");
    expect(path.stops.map((s) => s.activityId)).toEqual(expected.map((e) => e.target.activity_id));
    expect(path.segments).toHaveLength(path.stops.length - 1);
  });

  it("takes link styling byte-for-byte from the stored timing field", () => {
    const path = threadPath(bundle, mainThread.id)!;
    path.segments.forEach((segment, i) => {
      const arriving = path.stops[i + 1];
      const stored = mainThread.evidence[arriving.entryIndex].timing;
      expect(segment.timing).toBe(stored);
      expect(segment.dotted).toBe(stored === "retroactive");
    });
    // fixture has both styles
    expect(path.segments.some((s) => s.dotted)).toBe(true);
    expect(path.segments.some((s) => !s.dotted)).toBe(true);
  });

  it("carries the withheld count for placeholders", () => {
    const path = threadPath(bundle, mainThread.id)!;
    expect(path.withheld).toBe(mainThread.withheld_count);
    expect(path.withheld).toBeGreaterThan(0); // fixture withheld one private entry
  });

  it("unknown threads yield null", () => {
    expect(threadPath(bundle, "nope")).toBeNull();
  });
});
