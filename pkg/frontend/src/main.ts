/** Bootstrap: fetch the bundle, derive state from the URL, render, repeat. */

import { getJson } from "./http.js";
import { renderApp, type AppContext } from "./render.js";
import { deriveState } from "./state.js";
import type { Bundle } from "./types.js";

export async function start(container: HTMLElement, base: string): Promise<AppContext> {
  const bundle = await getJson<Bundle>(`${base}/bundle.json`);
  const ctx: AppContext = {
    bundle,
    base,
    navigate: () => {},
    reportCache: new Map(),
    artifactTextCache: new Map(),
  };

  const rerender = () => {
    void renderApp(container, ctx, deriveState(bundle, window.location.search));
  };
  ctx.navigate = (query: string) => {
    const url = query ? query : window.location.pathname;
    window.history.pushState(null, "", url);
    rerender();
  };
  window.addEventListener("popstate", rerender);
  await renderApp(container, ctx, deriveState(bundle, window.location.search));
  return ctx;
}

declare global {
  interface Window {
    __TRACEKIT_READER_TESTING__?: boolean;
  }
}

if (typeof window !== "undefined" && !window.__TRACEKIT_READER_TESTING__) {
  const container = document.getElementById("app");
  if (container) {
    const base = document.body.dataset.bundleBase ?? "./bundle";
    start(container, base).catch((error) => {
      container.textContent = `failed to load bundle: ${error}`;
    });
  }
}
