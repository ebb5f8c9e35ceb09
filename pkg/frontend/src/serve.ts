/**
 * Loopback static server with an API proxy.
 *
 * Serves this package's files and forwards /api/* to the review
 * service, so the browser talks to a single origin and the review
 * service can stay loopback-only with no cross-origin headers.
 *
 *   node dist/serve.js [--port 8600] [--api http://127.0.0.1:8400]
 */

import { readFile } from "node:fs/promises";
import { createServer } from "node:http";
import type { IncomingMessage, ServerResponse } from "node:http";
import { extname, join, normalize } from "node:path";
import { fileURLToPath } from "node:url";

const ROOT = fileURLToPath(new URL("..", import.meta.url));

const MEDIA_TYPES: Record<string, string> = {
  ".html": "text/html; charset=utf-8",
  ".css": "text/css; charset=utf-8",
  ".js": "text/javascript; charset=utf-8",
  ".map": "application/json; charset=utf-8",
  ".json": "application/json; charset=utf-8",
  ".png": "image/png",
  ".svg": "image/svg+xml",
};

function argValue(flag: string, fallback: string): string {
  const index = process.argv.indexOf(flag);
  if (index !== -1 && index + 1 < process.argv.length) {
    return process.argv[index + 1];
  }
  return fallback;
}

async function proxyApi(
  request: IncomingMessage,
  response: ServerResponse,
  apiBase: string,
  path: string,
): Promise<void> {
  const chunks: Buffer[] = [];
  for await (const chunk of request) chunks.push(chunk as Buffer);
  const body = Buffer.concat(chunks);

  let upstream: Response;
  try {
    upstream = await fetch(`${apiBase}${path}`, {
      method: request.method,
      headers: { "Content-Type": request.headers["content-type"] ?? "application/json" },
      body: body.length > 0 ? body : undefined,
    });
  } catch (error) {
    response.writeHead(502, { "Content-Type": "application/json" });
    response.end(JSON.stringify({ detail: `review service unreachable: ${String(error)}` }));
    return;
  }
  const payload = Buffer.from(await upstream.arrayBuffer());
  response.writeHead(upstream.status, {
    "Content-Type": upstream.headers.get("content-type") ?? "application/octet-stream",
  });
  response.end(payload);
}

async function serveFile(response: ServerResponse, urlPath: string): Promise<void> {
  const relative = urlPath === "/" ? "index.html" : urlPath.replace(/^\/+/, "");
  const resolved = normalize(join(ROOT, relative));
  if (!resolved.startsWith(normalize(ROOT))) {
    response.writeHead(403);
    response.end("forbidden");
    return;
  }
  try {
    const content = await readFile(resolved);
    response.writeHead(200, {
      "Content-Type": MEDIA_TYPES[extname(resolved)] ?? "application/octet-stream",
    });
    response.end(content);
  } catch {
    response.writeHead(404);
    response.end("not found");
  }
}

export function startServer(port: number, apiBase: string): ReturnType<typeof createServer> {
  const server = createServer((request, response) => {
    const path = (request.url ?? "/").split("?")[0];
    if (path.startsWith("/api/")) {
      void proxyApi(request, response, apiBase, path.slice("/api".length));
      return;
    }
    void serveFile(response, path);
  });
  server.listen(port, "127.0.0.1", () => {
    console.log(`review UI on http://127.0.0.1:${port} (API: ${apiBase})`);
  });
  return server;
}

if (process.argv[1]?.endsWith("serve.js")) {
  startServer(
    Number(argValue("--port", "8600")),
    argValue("--api", "http://127.0.0.1:8400"),
  );
}
