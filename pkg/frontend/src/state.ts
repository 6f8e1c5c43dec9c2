/** Reader state: a pure function of (bundle, URL query). */

import type { Bundle, BundleActivity, BundleArtifact, BundleThread } from "./types.js";
import { findActivity, findArtifact, findThread } from "./types.js";
import { routeFromQuery, type Route, type View } from "./routing.js";

export interface DetailTarget {
  granularity: "activity" | "artifact";
  activity: BundleActivity;
  artifact?: BundleArtifact;
}

export interface ReaderState {
  route: Route;
  view: View;
  selectedThread: string | null;
  tagFilter: string[];
  detail: DetailTarget | null;
  /** Set when the route names something the bundle does not hold. */
  notFound: string | null;
}

export function deriveState(bundle: Bundle, query: string): ReaderState {
  const route = routeFromQuery(query);
  const state: ReaderState = {
    route,
    view: "overview",
    selectedThread: null,
    tagFilter: route.kind === "invalid" ? [] : route.tags,
    detail: null,
    notFound: null,
  };

  if (route.kind === "invalid") {
    state.notFound = route.reason;
    return state;
  }
  if (route.kind === "overview") {
    return state;
  }

  state.view = route.view;
  if (route.project !== bundle.name) {
    state.notFound = `this bundle holds project '${bundle.name}', not '${route.project}'`;
    return state;
  }

  if (route.granularity === "thread") {
    const thread = findThread(bundle, route.id);
    if (!thread) {
      state.notFound = `thread ${route.id} is not in this bundle`;
      return state;
    }
    state.selectedThread = thread.id;
    return state;
  }

  if (route.granularity === "activity") {
    const activity = findActivity(bundle, route.id);
    if (!activity) {
      state.notFound = `activity ${route.id} is not in this bundle`;
      return state;
    }
    state.detail = { granularity: "activity", activity };
    return state;
  }

  const found = findArtifact(bundle, route.id);
  if (!found) {
    state.notFound = `artifact ${route.id} is not in this bundle`;
    return state;
  }
  state.detail = { granularity: "artifact", activity: found.activity, artifact: found.artifact };
  return state;
}

/** Does an activity match the tag filter (empty filter matches all)? */
export function matchesFilter(activity: BundleActivity, filter: string[]): boolean {
  if (filter.length === 0) return true;
  const wanted = new Set(filter.map((t) => t.toLowerCase()));
  if (activity.tags.some((t) => wanted.has(t.toLowerCase()))) return true;
  return activity.artifacts.some((f) => f.tags.some((t) => wanted.has(t.toLowerCase())));
}

/** Threads listed in the sidebar: everything not merged away. */
export function sidebarThreads(bundle: Bundle): BundleThread[] {
  return bundle.threads.filter((t) => t.status !== "merged_away");
}

/** Evidence entries (with their thread) that reference an entity. */
export function evidenceAbout(
  bundle: Bundle,
  activityId: string,
  artifactId?: string,
): { thread: BundleThread; entryIndex: number }[] {
  const hits: { thread: BundleThread; entryIndex: number }[] = [];
  for (const thread of bundle.threads) {
    thread.evidence.forEach((entry, entryIndex) => {
      if (entry.target.granularity === "note") return;
      if (artifactId !== undefined) {
        if (entry.target.artifact_id === artifactId) hits.push({ thread, entryIndex });
      } else if (entry.target.activity_id === activityId) {
        hits.push({ thread, entryIndex });
      }
    });
  }
  return hits;
}
