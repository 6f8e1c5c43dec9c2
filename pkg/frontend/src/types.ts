/** Shapes of an exported bundle, mirroring bundle.json (schema_version 1). */

export type Timing = "retroactive" | "forward";
export type Granularity = "activity" | "artifact" | "fragment" | "note";
export type ThreadStatus = "active" | "dead_end" | "merged_away";

export interface BundleArtifact {
  id: string;
  kind: string;
  description: string;
  file_ref: string;
  media_class: string;
  checksum: string;
  tags: string[];
}

export interface BundleActivity {
  id: string;
  title: string;
  occurred_at: string;
  recorded_at: string;
  tags: string[];
  artifacts: BundleArtifact[];
}

export interface Fragment {
  start: number;
  end: number;
  quoted_text: string;
}

export interface EvidenceTarget {
  granularity: Granularity;
  activity_id?: string;
  artifact_id?: string;
  fragment?: Fragment;
}

export interface EvidenceEntry {
  target: EvidenceTarget;
  rationale: string;
  added_at: string;
  timing: Timing;
}

export interface BundleThread {
  id: string;
  name: string;
  description: string;
  created_at: string;
  status: ThreadStatus;
  evidence: EvidenceEntry[];
  merged_from: string[];
  branched_from: string | null;
  withheld_count: number;
}

export interface TagEntry {
  label: string;
  note: string;
}

export interface BundleReportRef {
  id: string;
  path: string;
  title: string;
}

export interface Bundle {
  schema_version: number;
  name: string;
  title: string;
  created_at: string;
  activities: BundleActivity[];
  activity_index: string[];
  threads: BundleThread[];
  tag_vocabulary: TagEntry[];
  reports: BundleReportRef[];
}

export interface IndexedCitation {
  citation: { project: string; view: string; granularity: string; id: string };
  char_offset: number;
}

export interface ReportIndexSection {
  heading: string;
  ordinal: number;
  citations: IndexedCitation[];
}

export interface ReportIndexDoc {
  report_id: string;
  sections: ReportIndexSection[];
  broken: { text: string; position: number; reason: string }[];
}

export function findActivity(bundle: Bundle, id: string): BundleActivity | undefined {
  return bundle.activities.find((a) => a.id === id);
}

export function findArtifact(
  bundle: Bundle,
  id: string,
): { activity: BundleActivity; artifact: BundleArtifact } | undefined {
  for (const activity of bundle.activities) {
    const artifact = activity.artifacts.find((f) => f.id === id);
    if (artifact) return { activity, artifact };
  }
  return undefined;
}

export function findThread(bundle: Bundle, id: string): BundleThread | undefined {
  return bundle.threads.find((t) => t.id === id);
}
