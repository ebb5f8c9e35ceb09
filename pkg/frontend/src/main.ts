/**
 * Browser entry point.
 *
 * The API base resolves from, in order: an `?api=` query parameter, a
 * `data-api` attribute on the #app element, and finally `/api` — the
 * prefix the bundled static server proxies to the review service.
 */

import { TriageClient } from "./api.js";
import { TriageApp } from "./app.js";

export function resolveApiBase(location: Location, root: HTMLElement): string {
  const fromQuery = new URLSearchParams(location.search).get("api");
  if (fromQuery) return fromQuery;
  const fromAttr = root.dataset.api;
  if (fromAttr) return fromAttr;
  return "/api";
}

const root = document.getElementById("app");
if (root !== null) {
  const app = new TriageApp(document, new TriageClient(resolveApiBase(window.location, root)));
  void app.start(window);
}
