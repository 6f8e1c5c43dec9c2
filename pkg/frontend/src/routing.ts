/** URL routes.
 *
 * The query contract is the citation URL form:
 *   ?project=<p>&view=<v>&granularity=<g>&id=<id>
 * plus optional repeated `tag` parameters for the overview filter, so the
 * whole reader state is derivable from (bundle, URL) alone and every deep
 * link is shareable and reload-stable.
 */

export type View = "overview" | "paper";

export interface EntityRoute {
  kind: "entity";
  project: string;
  view: View;
  granularity: "activity" | "artifact" | "thread";
  id: string;
  tags: string[];
}

export interface OverviewRoute {
  kind: "overview";
  tags: string[];
}

export interface InvalidRoute {
  kind: "invalid";
  reason: string;
}

export type Route = EntityRoute | OverviewRoute | InvalidRoute;

const VIEWS = new Set(["overview", "paper"]);
const GRANULARITIES = new Set(["activity", "artifact", "thread"]);

export function routeFromQuery(query: string): Route {
  const params = new URLSearchParams(query.startsWith("?") ? query.slice(1) : query);
  const tags = params.getAll("tag").filter((t) => t.length > 0);
  const fields = ["project", "view", "granularity", "id"] as const;
  const present = fields.filter((f) => params.get(f) !== null);

  if (present.length === 0) {
    return { kind: "overview", tags };
  }
  if (present.length !== fields.length) {
    const missing = fields.filter((f) => params.get(f) === null);
    return { kind: "invalid", reason: `incomplete deep link: missing ${missing.join(", ")}` };
  }
  const project = params.get("project")!;
  const view = params.get("view")!;
  const granularity = params.get("granularity")!;
  const id = params.get("id")!;
  if (!project || !id) {
    return { kind: "invalid", reason: "empty project or id parameter" };
  }
  if (!VIEWS.has(view)) {
    return { kind: "invalid", reason: `unknown view '${view}'` };
  }
  if (!GRANULARITIES.has(granularity)) {
    return { kind: "invalid", reason: `unknown granularity '${granularity}'` };
  }
  return {
    kind: "entity",
    project,
    view: view as View,
    granularity: granularity as EntityRoute["granularity"],
    id,
    tags,
  };
}

export function queryFromRoute(route: Route): string {
  const params = new URLSearchParams();
  if (route.kind === "entity") {
    params.set("project", route.project);
    params.set("view", route.view);
    params.set("granularity", route.granularity);
    params.set("id", route.id);
  }
  if (route.kind !== "invalid") {
    for (const tag of route.tags) params.append("tag", tag);
  }
  const encoded = params.toString();
  return encoded ? `?${encoded}` : "";
}

export function entityQuery(
  project: string,
  view: View,
  granularity: EntityRoute["granularity"],
  id: string,
  tags: string[] = [],
): string {
  return queryFromRoute({ kind: "entity", project, view, granularity, id, tags });
}
