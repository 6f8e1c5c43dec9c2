/** Timeline geometry.
 *
 * The bundle carries data, not geometry: bubble positions are computed
 * client-side from occurred_at timestamps. Activities sit on a horizontal
 * time axis in activity_index (chronological) order, artifacts nest as
 * small dots inside their activity's bubble, and overlapping bubbles are
 * pushed into lanes below the axis.
 */

import type { Bundle } from "./types.js";
import { matchesFilter } from "./state.js";

export interface ArtifactDot {
  artifactId: string;
  x: number;
  y: number;
  r: number;
}

export interface Bubble {
  activityId: string;
  title: string;
  occurredAt: string;
  x: number;
  y: number;
  radius: number;
  dimmed: boolean;
  artifacts: ArtifactDot[];
}

const MARGIN = 48;
const BASE_RADIUS = 14;
const LANE_HEIGHT = 64;

export function layoutTimeline(
  bundle: Bundle,
  width: number,
  tagFilter: string[] = [],
): Bubble[] {
  const byId = new Map(bundle.activities.map((a) => [a.id, a]));
  const ordered = bundle.activity_index
    .map((id) => byId.get(id))
    .filter((a): a is NonNullable<typeof a> => a !== undefined);
  if (ordered.length === 0) return [];

  const times = ordered.map((a) => Date.parse(a.occurred_at));
  const min = Math.min(...times);
  const max = Math.max(...times);
  const span = Math.max(max - min, 1);
  const usable = Math.max(width - 2 * MARGIN, 1);

  const bubbles: Bubble[] = [];
  const laneEnds: number[] = []; // rightmost occupied x per lane
  ordered.forEach((activity, index) => {
    const radius = BASE_RADIUS + 3 * Math.min(activity.artifacts.length, 6);
    const x = MARGIN + ((times[index] - min) / span) * usable;

    let lane = 0;
    while (lane < laneEnds.length && x - radius <= laneEnds[lane]) lane += 1;
    laneEnds[lane] = x + radius;
    const y = LANE_HEIGHT + lane * LANE_HEIGHT;

    const dots = activity.artifacts.map((artifact, dotIndex): ArtifactDot => {
      const angle = (2 * Math.PI * dotIndex) / Math.max(activity.artifacts.length, 1);
      const orbit = activity.artifacts.length === 1 ? 0 : radius * 0.55;
      return {
        artifactId: artifact.id,
        x: x + orbit * Math.cos(angle),
        y: y + orbit * Math.sin(angle),
        r: 4,
      };
    });

    bubbles.push({
      activityId: activity.id,
      title: activity.title,
      occurredAt: activity.occurred_at,
      x,
      y,
      radius,
      dimmed: !matchesFilter(activity, tagFilter),
      artifacts: dots,
    });
  });
  return bubbles;
}

export function timelineHeight(bubbles: Bubble[]): number {
  return Math.max(2 * LANE_HEIGHT, ...bubbles.map((b) => b.y + b.radius + LANE_HEIGHT / 2));
}
