/** Test support: the fixture bundle on disk, served through a recording
 * fetch stub so tests can both render and audit every network call. */

import { readFileSync } from "node:fs";
import { join } from "node:path";

export const FIXTURE_DIR = join(import.meta.dirname, "fixtures", "bundle");

export interface RecordedCall {
  url: string;
  method: string;
}

export function loadFixtureBundle() {
  return JSON.parse(readFileSync(join(FIXTURE_DIR, "bundle.json"), "utf-8"));
}

export function loadFixtureIndex(reportId: string) {
  return JSON.parse(readFileSync(join(FIXTURE_DIR, "reports", `${reportId}.index.json`), "utf-8"));
}

/** Replace global fetch with a static file server over the fixture dir.
 * Returns the call log; every entry records the method used. */
export function installFixtureFetch(): RecordedCall[] {
  const calls: RecordedCall[] = [];
  globalThis.fetch = (async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input);
    const method = (init?.method ?? "GET").toUpperCase();
    calls.push({ url, method });
    const rel = url.replace(/^\.\//, "");
    try {
      const data = readFileSync(join(FIXTURE_DIR, rel));
      return new Response(new Uint8Array(data), { status: 200 });
    } catch {
      return new Response("not found", { status: 404 });
    }
  }) as typeof fetch;
  return calls;
}

export function assertOnlyGets(calls: RecordedCall[]): void {
  const offenders = calls.filter((c) => c.method !== "GET");
  if (offenders.length > 0) {
    throw new Error(`non-GET requests issued: ${JSON.stringify(offenders)}`);
  }
}
