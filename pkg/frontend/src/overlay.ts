/** Thread overlay: the evidence path drawn over the timeline.
 *
 * One path stop per evidence entry (notes excluded), in evidence order.
 * The link arriving at an entry takes that entry's stored timing field —
 * dotted for retroactive, solid for forward — byte-for-byte from
 * bundle.json; the reader never reclassifies.
 */

import type { Bundle, Timing } from "./types.js";
import { findThread } from "./types.js";

export interface PathStop {
  entryIndex: number;
  activityId: string;
  timing: Timing;
  rationale: string;
}

export interface PathSegment {
  fromActivity: string;
  toActivity: string;
  timing: Timing;
  dotted: boolean;
}

export interface ThreadPath {
  threadId: string;
  stops: PathStop[];
  segments: PathSegment[];
  withheld: number;
}

export function threadPath(bundle: Bundle, threadId: string): ThreadPath | null {
  const thread = findThread(bundle, threadId);
  if (!thread) return null;

  const stops: PathStop[] = [];
  thread.evidence.forEach((entry, entryIndex) => {
    if (entry.target.granularity === "note" || !entry.target.activity_id) return;
    stops.push({
      entryIndex,
      activityId: entry.target.activity_id,
      timing: entry.timing,
      rationale: entry.rationale,
    });
  });

  const segments: PathSegment[] = [];
  for (let i = 1; i < stops.length; i += 1) {
    segments.push({
      fromActivity: stops[i - 1].activityId,
      toActivity: stops[i].activityId,
      timing: stops[i].timing,
      dotted: stops[i].timing === "retroactive",
    });
  }
  return { threadId, stops, segments, withheld: thread.withheld_count };
}
